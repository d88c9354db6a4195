#include "io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace ierg::cli {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string() + " for reading");
  return in;
}

}  // namespace

std::vector<std::string> default_item_names(std::size_t p) {
  std::vector<std::string> names(p);
  for (std::size_t j = 0; j < p; ++j) names[j] = "item" + std::to_string(j + 1);
  return names;
}

ResponseTable parse_response_csv(std::istream& in, const std::string& source) {
  std::vector<std::string> names;
  std::vector<std::uint8_t> cells;
  std::size_t p = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (first) {
      first = false;
      p = fields.size();
      const bool header = std::any_of(fields.begin(), fields.end(), [](const std::string& f) { return f != "0" && f != "1"; });
      if (header) {
        names = fields;
        continue;
      }
    }
    if (fields.size() != p) {
      throw ParseError(source + ": line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                       " fields, expected " + std::to_string(p));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (fields[c] != "0" && fields[c] != "1") {
        throw ParseError(source + ": line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                         ": expected 0 or 1, got '" + fields[c] + "'");
      }
      cells.push_back(fields[c] == "1" ? 1 : 0);
    }
    ++rows;
  }
  if (rows == 0) throw ParseError(source + ": no data rows");
  if (p < 2) throw ParseError(source + ": need at least two item columns");
  if (names.empty()) names = default_item_names(p);
  return {ItemResponseMatrix(rows, p, std::move(cells)), std::move(names)};
}

ResponseTable read_response_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_response_csv(in, path.string());
}

void write_response_csv(std::ostream& out, const ItemResponseMatrix& x, const std::vector<std::string>& names) {
  for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
  out << '\n';
  for (std::size_t i = 0; i < x.n(); ++i) {
    for (std::size_t j = 0; j < x.p(); ++j) out << (j ? "," : "") << static_cast<int>(x(i, j));
    out << '\n';
  }
}

std::vector<std::string> parameter_names(const std::vector<std::string>& items) {
  const std::size_t p = items.size();
  std::vector<std::string> names;
  names.reserve(param_count(p));
  for (const auto& item : items) names.push_back("beta:" + item);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = j + 1; k < p; ++k) names.push_back("gamma:" + items[j] + ":" + items[k]);
  }
  return names;
}

json chain_header(const std::vector<std::string>& items) {
  return {{"format", "ierg-chain"},
          {"version", kChainFormatVersion},
          {"p", items.size()},
          {"q", param_count(items.size())},
          {"items", items}};
}

json chain_record_json(const ChainRecord& rec) {
  return {{"iter", rec.iter},
          {"theta", rec.theta.values()},
          {"lambda", rec.selection.lambda},
          {"sigma2", rec.selection.sigma2},
          {"omega", rec.selection.omega}};
}

ChainFile read_chain(const std::filesystem::path& path) {
  auto in = open_input(path);
  ChainFile out;
  std::string line;
  std::size_t line_no = 0;
  std::size_t p = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      if (line_no == 1) {
        if (j.value("format", "") != "ierg-chain") throw ParseError(path.string() + ": not a chain file");
        if (j.at("version").get<int>() != kChainFormatVersion) {
          throw ParseError(path.string() + ": unsupported chain format version");
        }
        out.items = j.at("items").get<std::vector<std::string>>();
        p = out.items.size();
        continue;
      }
      ChainRecord rec;
      rec.iter = j.at("iter").get<std::size_t>();
      rec.theta = ParamVector(p, j.at("theta").get<std::vector<double>>());
      rec.selection.lambda = j.at("lambda").get<std::vector<std::uint8_t>>();
      rec.selection.sigma2 = j.at("sigma2").get<double>();
      rec.selection.omega = j.at("omega").get<double>();
      if (rec.selection.lambda.size() != rec.theta.q()) throw ParseError("indicator vector has the wrong length");
      out.records.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (p == 0) throw ParseError(path.string() + ": missing chain header");
  return out;
}

json adjacency_json(const SignedAdjacency& a) {
  json rows = json::array();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto row = a.row(r);
    rows.push_back(std::vector<int>(row.begin(), row.end()));
  }
  return rows;
}

json estimate_json(const NetworkEstimate& est, const std::vector<std::string>& items) {
  const std::size_t p = est.theta_hat.p();
  const auto betas = est.theta_hat.betas();
  json edges = json::array();
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = j + 1; k < p; ++k) {
      const double g = est.theta_hat.gamma(j, k);
      if (g == 0.0) continue;
      edges.push_back({{"a", items[j]}, {"b", items[k]}, {"weight", g}, {"pip", est.pip[p + pair_index(j, k, p)]}});
    }
  }
  return {{"p", p},
          {"q", est.theta_hat.q()},
          {"items", items},
          {"parameters", parameter_names(items)},
          {"theta_hat", est.theta_hat.values()},
          {"pip", est.pip},
          {"beta", std::vector<double>(betas.begin(), betas.end())},
          {"edges", edges},
          {"signed_adjacency", adjacency_json(est.signed_adjacency)}};
}

NetworkEstimate estimate_from_json(const json& j) {
  try {
    const auto p = j.at("p").get<std::size_t>();
    ParamVector theta(p, j.at("theta_hat").get<std::vector<double>>());
    auto pip = j.at("pip").get<std::vector<double>>();
    if (pip.size() != theta.q()) throw ValidationError("estimate pip vector has the wrong length");
    return {theta, std::move(pip), signed_adjacency(theta)};
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed estimate: ") + e.what());
  }
}

void write_edges_csv(std::ostream& out, const NetworkEstimate& est, const std::vector<std::string>& items) {
  const std::size_t p = est.theta_hat.p();
  out << "item_a,item_b,sign,weight,pip\n";
  const auto flags = out.flags();
  out.precision(17);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = j + 1; k < p; ++k) {
      const double g = est.theta_hat.gamma(j, k);
      if (g == 0.0) continue;
      out << items[j] << ',' << items[k] << ',' << (g > 0 ? 1 : -1) << ',' << g << ','
          << est.pip[p + pair_index(j, k, p)] << '\n';
    }
  }
  out.flags(flags);
}

void write_json_file(const std::filesystem::path& path, const json& value) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << value.dump(2) << '\n';
}

json read_json_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace ierg::cli
