#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "ranknosh/search.hpp"

namespace ranknosh {

// Deterministic: no timestamps or host data, so equal runs give equal bytes.
nlohmann::json result_to_json(const SearchResult& r);
std::string result_to_text(const SearchResult& r);

// round,pool_size,budget_so_far,best_so_far,pairs,final_loss
void write_round_log_csv(const std::vector<RoundLog>& log, std::ostream& out);
// round,epoch,mean_loss
void write_loss_trace_csv(const std::vector<std::vector<double>>& traces, std::ostream& out);

// Header plus rows of cells; no quoting (emitted CSVs never contain commas in fields).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(std::istream& in);
void write_csv(const CsvTable& t, std::ostream& out);

}  // namespace ranknosh
