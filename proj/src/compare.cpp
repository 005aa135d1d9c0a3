#include "bta/compare.hpp"

#include "bta/errors.hpp"

namespace bta {

double block_error(const DenseBlock& candidate, const DenseBlock& reference) {
  const double diff = frobenius_distance(candidate, reference);
  const double ref = reference.frobenius_norm();
  return ref > 0.0 ? diff / ref : diff;
}

namespace {

void merge_into(CompareReport& into, CompareReport from) {
  for (auto& c : from.classes) into.classes.push_back(std::move(c));
  if (from.worst > into.worst || (into.worst_block.empty() && !from.worst_block.empty())) {
    into.worst = from.worst;
    into.worst_block = std::move(from.worst_block);
  }
}

}  // namespace

CompareReport compare_matrices(const BtaMatrix& candidate, const BtaMatrix& reference,
                               const std::string& prefix) {
  if (candidate.shape() != reference.shape()) {
    throw DimensionError("compare: candidate shape (" + std::to_string(candidate.n()) + ", " +
                         std::to_string(candidate.b()) + ", " + std::to_string(candidate.a()) +
                         ") differs from the reference");
  }
  candidate.check_consistent();
  reference.check_consistent();

  CompareReport rep;
  auto scan = [&](const char* name, const std::vector<DenseBlock>& c,
                  const std::vector<DenseBlock>& r) {
    ClassError ce{prefix + "." + name, c.size(), 0.0, 0};
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double e = block_error(c[i], r[i]);
      if (e > ce.max_error) {
        ce.max_error = e;
        ce.worst_index = i;
      }
    }
    if (ce.max_error > rep.worst) {
      rep.worst = ce.max_error;
      rep.worst_block = ce.name + "[" + std::to_string(ce.worst_index) + "]";
    }
    rep.classes.push_back(std::move(ce));
  };
  scan("diag", candidate.diag, reference.diag);
  scan("lower", candidate.lower, reference.lower);
  scan("upper", candidate.upper, reference.upper);
  if (candidate.a() > 0) {
    scan("arrow_row", candidate.arrow_row, reference.arrow_row);
    scan("arrow_col", candidate.arrow_col, reference.arrow_col);
    scan("tip", {candidate.tip}, {reference.tip});
  }
  return rep;
}

CompareReport compare_solutions(const SelectedSolution& candidate,
                                const SelectedSolution& reference) {
  if (candidate.x_b.has_value() != reference.x_b.has_value()) {
    throw DimensionError("compare: only one side carries a quadratic solution");
  }
  CompareReport rep = compare_matrices(candidate.x_a, reference.x_a, "x_a");
  if (reference.x_b) merge_into(rep, compare_matrices(*candidate.x_b, *reference.x_b, "x_b"));
  return rep;
}

}  // namespace bta
