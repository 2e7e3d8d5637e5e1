#include "ranknosh/report.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ranknosh/json_io.hpp"

namespace ranknosh {

nlohmann::json result_to_json(const SearchResult& r) {
  nlohmann::json j;
  j["method"] = r.method;
  j["best_arch"] = arch_to_json(r.best_arch);
  j["best_key"] = r.best_arch.key().hex();
  j["best_val_acc"] = r.best_val_acc;
  j["best_test_acc"] = r.best_test_acc;
  j["best_final_val_acc"] = r.best_final_val_acc;
  j["total_budget_epochs"] = r.total_budget_epochs;
  j["rounds"] = r.rounds;
  auto& pool = j["pool_final"] = nlohmann::json::array();
  for (const auto& e : r.pool_final) {
    nlohmann::json pe{{"key", e.key().hex()},
                      {"level", e.level},
                      {"trained_epochs", e.trained_epochs},
                      {"prior", e.prior_score},
                      {"arrival_round", e.arrival_round}};
    pe["val_acc"] = e.current_val_acc ? nlohmann::json(*e.current_val_acc) : nlohmann::json(nullptr);
    pool.push_back(std::move(pe));
  }
  auto& log = j["per_round_log"] = nlohmann::json::array();
  for (const auto& l : r.per_round_log) {
    log.push_back({{"round", l.round},
                   {"pool_size", l.pool_size},
                   {"budget_so_far", l.budget_so_far},
                   {"best_so_far", l.best_so_far},
                   {"pairs", l.pairs},
                   {"final_loss", l.final_loss}});
  }
  return j;
}

std::string result_to_text(const SearchResult& r) {
  std::ostringstream os;
  os << "method            " << r.method << "\n"
     << "best_key          " << r.best_arch.key().hex() << "\n"
     << "best_val_acc      " << format_double(r.best_val_acc) << "\n"
     << "best_test_acc     " << format_double(r.best_test_acc) << "\n"
     << "best_final_val    " << format_double(r.best_final_val_acc) << "\n"
     << "budget_epochs     " << r.total_budget_epochs << "\n"
     << "rounds            " << r.rounds << "\n";
  return os.str();
}

void write_round_log_csv(const std::vector<RoundLog>& log, std::ostream& out) {
  CsvTable t{{"round", "pool_size", "budget_so_far", "best_so_far", "pairs", "final_loss"}, {}};
  for (const auto& l : log) {
    t.rows.push_back({std::to_string(l.round), std::to_string(l.pool_size), std::to_string(l.budget_so_far),
                      format_double(l.best_so_far), std::to_string(l.pairs), format_double(l.final_loss)});
  }
  write_csv(t, out);
}

void write_loss_trace_csv(const std::vector<std::vector<double>>& traces, std::ostream& out) {
  CsvTable t{{"round", "epoch", "mean_loss"}, {}};
  for (std::size_t r = 0; r < traces.size(); ++r) {
    for (std::size_t e = 0; e < traces[r].size(); ++e) {
      t.rows.push_back({std::to_string(r + 1), std::to_string(e + 1), format_double(traces[r][e])});
    }
  }
  write_csv(t, out);
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: missing header");
  t.header = split(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw std::runtime_error("csv line " + std::to_string(lineno) + ": expected " +
                               std::to_string(t.header.size()) + " cells, got " + std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

void write_csv(const CsvTable& t, std::ostream& out) {
  auto row = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << "\n";
  };
  row(t.header);
  for (const auto& r : t.rows) row(r);
}

}  // namespace ranknosh
