#include "binary_io.hpp"
#include "chansel/signal.hpp"

#include <json.hpp>

#include <charconv>
#include <sstream>

namespace chansel {

using nlohmann::json;

void write_signal(const MultichannelSignal &x, const std::filesystem::path &header_path) {
  auto payload = header_path;
  payload.replace_extension(".f64");
  json header = {{"channels", x.channels()},
                 {"samples_per_channel", x.samples()},
                 {"sample_rate", x.sample_rate()},
                 {"payload", payload.filename().string()}};
  detail::write_text(header_path, header.dump(2) + "\n");
  detail::write_f64_le(payload, x.data());
}

MultichannelSignal read_signal(const std::filesystem::path &header_path) {
  json header;
  try {
    header = json::parse(detail::read_text(header_path));
  } catch (const json::exception &e) {
    throw IoError("bad signal header " + header_path.string() + ": " + e.what());
  }
  const auto channels = header.at("channels").get<std::size_t>();
  const auto samples = header.at("samples_per_channel").get<std::size_t>();
  const auto rate = header.value("sample_rate", 1000.0);
  auto payload = header_path.parent_path() / header.at("payload").get<std::string>();
  return MultichannelSignal(channels, samples, detail::read_f64_le(payload, channels * samples),
                            rate);
}

namespace {
bool parse_double(std::string_view cell, double &out) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t'))
    cell.remove_prefix(1);
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r' || cell.back() == '\t'))
    cell.remove_suffix(1);
  if (cell.empty())
    return false;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}
} // namespace

MultichannelSignal read_signal_csv(const std::filesystem::path &path, double sample_rate) {
  std::istringstream in(detail::read_text(path));
  std::vector<std::vector<double>> columns;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r")
      continue;
    std::vector<double> cells;
    bool numeric = true;
    std::size_t start = 0;
    while (start <= line.size()) {
      auto end = line.find(',', start);
      if (end == std::string::npos)
        end = line.size();
      double v = 0;
      if (!parse_double(std::string_view(line).substr(start, end - start), v)) {
        numeric = false;
        break;
      }
      cells.push_back(v);
      start = end + 1;
    }
    if (!numeric) {
      if (columns.empty() && line_no == 1)
        continue; // header row
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": non-numeric cell");
    }
    if (columns.empty())
      columns.resize(cells.size());
    if (cells.size() != columns.size())
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(columns.size()) + " columns");
    for (std::size_t c = 0; c < cells.size(); ++c)
      columns[c].push_back(cells[c]);
  }
  if (columns.empty())
    throw ParseError(path.string() + ": no samples");
  return MultichannelSignal(columns, sample_rate);
}

void write_signal_csv(const MultichannelSignal &x, const std::filesystem::path &path) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t c = 0; c < x.channels(); ++c)
    out << (c ? ",ch" : "ch") << c + 1;
  out << '\n';
  for (std::size_t t = 0; t < x.samples(); ++t) {
    for (std::size_t c = 0; c < x.channels(); ++c)
      out << (c ? "," : "") << x.at(c, t);
    out << '\n';
  }
  detail::write_text(path, out.str());
}

} // namespace chansel
