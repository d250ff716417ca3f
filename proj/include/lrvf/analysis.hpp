#pragma once

#include "lrvf/csv.hpp"
#include "lrvf/experiment.hpp"
#include "lrvf/linalg.hpp"
#include "lrvf/tensor.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace lrvf {

// Normalized cumulative reward error (r - r_hat) / r: positive when the
// approximate policy underperforms the reference.
inline double ncre(double reference_return, double approx_return) {
  require(reference_return != 0.0, "ncre: reference return is zero");
  return (reference_return - approx_return) / reference_return;
}

// State-vs-action Q matrix of any model: tables and matrix factors reproduce
// their C_S x C_A matrix, tensor factors are reconstructed and matricized
// with states as rows.
inline Mat model_q_matrix(const ValueModel& model, const ModelDims& dims) {
  if (const QTable* q = std::get_if<QTable>(&model)) return q->values;
  if (const MatrixFactors* m = std::get_if<MatrixFactors>(&model)) return m->left * m->right;
  const TensorFactors& t = std::get<TensorFactors>(model);
  const DenseTensor full = reconstruct(t.factors);
  // Last-index-fastest layout: flat = state_flat * C_A + action_flat.
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      full.data.data(), dims.num_states(), dims.num_actions());
}

struct SvdAnalysis {
  Vec singular_values;
  Vec cumulative_energy;
  int effective_rank_090 = 0;
  int effective_rank_099 = 0;
};

inline SvdAnalysis analyze_svd(const Mat& q_matrix) {
  SvdAnalysis out;
  out.singular_values = svd(q_matrix).singular_values;
  const double total = out.singular_values.squaredNorm();
  out.cumulative_energy = Vec(out.singular_values.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < out.singular_values.size(); ++i) {
    acc += out.singular_values[i] * out.singular_values[i];
    out.cumulative_energy[i] = acc / total;
  }
  out.effective_rank_090 = effective_rank(out.singular_values, 0.90);
  out.effective_rank_099 = effective_rank(out.singular_values, 0.99);
  return out;
}

inline void write_svd_csv(const SvdAnalysis& a, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  {
    CsvWriter csv((fs::path(out_dir) / "svd_spectrum.csv").string());
    csv.header({"k", "sigma", "cumulative_energy"});
    for (Eigen::Index i = 0; i < a.singular_values.size(); ++i)
      csv.row({CsvWriter::cell(static_cast<std::int64_t>(i) + 1),
               CsvWriter::cell(a.singular_values[i]), CsvWriter::cell(a.cumulative_energy[i])});
  }
  {
    CsvWriter csv((fs::path(out_dir) / "svd_summary.csv").string());
    csv.header({"effective_rank_090", "effective_rank_099"});
    csv.row({CsvWriter::cell(a.effective_rank_090), CsvWriter::cell(a.effective_rank_099)});
  }
}

struct SweepRow {
  int rank = 0;
  double nfe = 0.0;
  int iterations = 0;
  bool degenerate = false;  // pseudo-inverse fallback fired during the fit
};

// PARAFAC fit error per rank, best of `restarts` seeded fits per rank.
inline std::vector<SweepRow> parafac_sweep(const DenseTensor& tensor, const std::vector<int>& ranks,
                                           int max_iters, double tol, std::uint64_t seed,
                                           int restarts = 3) {
  require(!ranks.empty(), "parafac_sweep: empty rank list");
  for (std::size_t i = 1; i < ranks.size(); ++i)
    require(ranks[i] > ranks[i - 1], "parafac_sweep: ranks must be strictly ascending");
  require(restarts >= 1, "parafac_sweep: restarts must be >= 1");
  std::vector<SweepRow> rows;
  for (int rank : ranks) {
    SweepRow best;
    best.nfe = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
      ParafacResult fit = parafac_als(tensor, rank, max_iters, tol,
                                      derive_seed(seed, static_cast<std::uint64_t>(r)));
      const double err = fit.fit_history.back();
      if (err < best.nfe) {
        best.rank = rank;
        best.nfe = err;
        best.iterations = fit.iterations;
        best.degenerate = fit.used_pseudo_inverse;
      }
    }
    rows.push_back(best);
  }
  return rows;
}

inline void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  CsvWriter csv(path);
  csv.header({"rank", "nfe", "iterations", "degenerate"});
  for (const SweepRow& r : rows)
    csv.row({CsvWriter::cell(r.rank), CsvWriter::cell(r.nfe), CsvWriter::cell(r.iterations),
             CsvWriter::cell(static_cast<int>(r.degenerate))});
}

struct TsvdPolicyRow {
  int rank = 0;
  double approx_return = 0.0;
  double ncre_value = 0.0;
  bool ncre_defined = true;
};

// Greedy returns of policies induced by rank-truncated copies of a learned
// Q matrix, reported as NCRE against the full-rank policy's return.
inline std::vector<TsvdPolicyRow> tsvd_policy_test(const Mat& q_matrix, const ModelDims& dims,
                                                   Task& task, const std::vector<int>& ranks,
                                                   int episodes, std::uint64_t seed,
                                                   double* reference_return_out = nullptr) {
  require(!ranks.empty(), "tsvd_policy_test: empty rank list");
  const auto greedy_return = [&](const Mat& q) {
    ValueModel model = QTable{q};
    return evaluate_greedy(model, dims, task, episodes, seed).first;
  };
  const double reference = greedy_return(q_matrix);
  if (reference_return_out) *reference_return_out = reference;
  std::vector<TsvdPolicyRow> rows;
  for (int rank : ranks) {
    TsvdPolicyRow row;
    row.rank = rank;
    row.approx_return = greedy_return(tsvd(q_matrix, rank));
    if (reference == 0.0) {
      row.ncre_defined = false;
    } else {
      row.ncre_value = ncre(reference, row.approx_return);
    }
    rows.push_back(row);
  }
  return rows;
}

inline void write_tsvd_policy_csv(const std::vector<TsvdPolicyRow>& rows, double reference,
                                  const std::string& path) {
  CsvWriter csv(path);
  csv.header({"rank", "greedy_return", "reference_return", "ncre"});
  for (const TsvdPolicyRow& r : rows)
    csv.row({CsvWriter::cell(r.rank), CsvWriter::cell(r.approx_return),
             CsvWriter::cell(reference), r.ncre_defined ? CsvWriter::cell(r.ncre_value) : "NA"});
}

// One row per completed experiment, mirroring the parameters-vs-reward
// summary layout.
struct TableRow {
  std::string environment;
  std::string algorithm;
  std::int64_t parameters = 0;
  double median_return = 0.0;
  bool has_return = true;
  int diverged_runs = 0;
};

inline TableRow table_row_from_summary(const json& summary) {
  TableRow row;
  row.environment = summary.at("environment").get<std::string>();
  row.algorithm = summary.at("algorithm").get<std::string>();
  row.parameters = summary.at("parameters").get<std::int64_t>();
  if (summary.at("final_median_greedy_return").is_null()) {
    row.has_return = false;
  } else {
    row.median_return = summary.at("final_median_greedy_return").get<double>();
  }
  row.diverged_runs = summary.value("diverged_runs", 0);
  return row;
}

inline void emit_table(const std::vector<TableRow>& rows, const std::string& path) {
  CsvWriter csv(path);
  csv.header({"environment", "algorithm", "parameters", "median_return", "diverged_runs"});
  for (const TableRow& r : rows)
    csv.row({r.environment, r.algorithm, CsvWriter::cell(r.parameters),
             r.has_return ? CsvWriter::cell(r.median_return) : "NA",
             CsvWriter::cell(r.diverged_runs)});
}

}  // namespace lrvf
