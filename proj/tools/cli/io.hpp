#pragma once

// File formats used by the command-line tool: 0/1 CSV matrices, JSONL chain
// files, JSON estimates and manifests, CSV edge lists.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ierg/error.hpp"
#include "ierg/model.hpp"
#include "ierg/sampler.hpp"

namespace ierg::cli {

using nlohmann::json;

inline constexpr int kChainFormatVersion = 1;

/// Malformed input file; the message carries the source and location.
class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct ResponseTable {
  ItemResponseMatrix x;
  std::vector<std::string> item_names;  // header row, or item1..itemp
};

/// Reads a comma-separated 0/1 matrix. A first row containing any field
/// other than 0 or 1 is taken as a header of item names.
ResponseTable parse_response_csv(std::istream& in, const std::string& source);
ResponseTable read_response_csv(const std::filesystem::path& path);

void write_response_csv(std::ostream& out, const ItemResponseMatrix& x, const std::vector<std::string>& names);

std::vector<std::string> default_item_names(std::size_t p);

/// Flat names of the q parameters: beta:<item>, then gamma:<item>:<item>.
std::vector<std::string> parameter_names(const std::vector<std::string>& items);

json chain_header(const std::vector<std::string>& items);
json chain_record_json(const ChainRecord& rec);

struct ChainFile {
  std::vector<std::string> items;
  std::vector<ChainRecord> records;
};

ChainFile read_chain(const std::filesystem::path& path);

json estimate_json(const NetworkEstimate& est, const std::vector<std::string>& items);
NetworkEstimate estimate_from_json(const json& j);

/// One line per nonzero interaction: item_a,item_b,sign,weight,pip.
void write_edges_csv(std::ostream& out, const NetworkEstimate& est, const std::vector<std::string>& items);

json adjacency_json(const SignedAdjacency& a);

/// Writes `value` with a trailing newline, replacing the file.
void write_json_file(const std::filesystem::path& path, const json& value);
json read_json_file(const std::filesystem::path& path);

}  // namespace ierg::cli
