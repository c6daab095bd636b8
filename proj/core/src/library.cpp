#include "dictsel/library.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include "dictsel/datagen.hpp"

namespace dictsel {

namespace {

void append_monomials_of_degree(int state_dim, int degree, std::vector<Term>& out) {
  // Exponent tuples of fixed total degree, first variable decreasing first.
  std::vector<int> expo(state_dim, 0);
  std::function<void(int, int)> rec = [&](int var, int remaining) {
    if (var == state_dim - 1) {
      expo[var] = remaining;
      Term t;
      t.kind = Term::Kind::monomial;
      t.exponents = expo;
      out.push_back(t);
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      expo[var] = e;
      rec(var + 1, remaining - e);
    }
  };
  rec(0, degree);
}

double eval_term(const Term& t, const double* state, int state_dim) {
  switch (t.kind) {
    case Term::Kind::monomial: {
      double v = 1.0;
      for (int j = 0; j < state_dim; ++j) {
        for (int e = 0; e < t.exponents[j]; ++e) v *= state[j];
      }
      return v;
    }
    case Term::Kind::sine:
      return std::sin(t.frequency * state[t.variable]);
    case Term::Kind::cosine:
      return std::cos(t.frequency * state[t.variable]);
    case Term::Kind::pde_trial:
      throw std::invalid_argument("evaluate: pde_trial terms are evaluated through the weak PDE transform, not on trajectory states");
  }
  return 0.0;
}

std::string superscript(int e) { return e >= 2 ? "^" + std::to_string(e) : ""; }

}  // namespace

int Term::total_degree() const {
  int d = 0;
  for (int e : exponents) d += e;
  return d;
}

bool Term::operator==(const Term& other) const {
  return kind == other.kind && exponents == other.exponents && frequency == other.frequency &&
         variable == other.variable && derivative_order == other.derivative_order;
}

std::string variable_name(int v, int state_dim) {
  if (state_dim <= 3) {
    static const char* names[3] = {"x", "y", "z"};
    return names[v];
  }
  return "x" + std::to_string(v + 1);
}

std::string term_label(const Term& term, int state_dim) {
  switch (term.kind) {
    case Term::Kind::monomial: {
      std::string s;
      for (int v = 0; v < static_cast<int>(term.exponents.size()); ++v) {
        const int e = term.exponents[v];
        if (e == 0) continue;
        s += variable_name(v, state_dim) + superscript(e);
      }
      return s.empty() ? "1" : s;
    }
    case Term::Kind::sine:
    case Term::Kind::cosine: {
      const std::string fn = term.kind == Term::Kind::sine ? "sin" : "cos";
      const std::string arg = (term.frequency == 1 ? "" : std::to_string(term.frequency)) +
                              variable_name(term.variable, state_dim);
      return fn + "(" + arg + ")";
    }
    case Term::Kind::pde_trial: {
      std::string mono;
      const int e = term.exponents.empty() ? 0 : term.exponents[0];
      if (e == 0) {
        mono = "1";
      } else {
        mono = "u" + superscript(e);
      }
      if (term.derivative_order == 0) return mono;
      return "dx" + superscript(term.derivative_order) + "(" + mono + ")";
    }
  }
  return "";
}

std::vector<std::string> Dictionary::labels() const {
  std::vector<std::string> out;
  out.reserve(terms.size());
  for (const Term& t : terms) out.push_back(t.label);
  return out;
}

int Dictionary::index_of(const std::string& label) const {
  for (int i = 0; i < size(); ++i) {
    if (terms[i].label == label) return i;
  }
  return -1;
}

int EvaluatedLibrary::index_of(const std::string& label) const {
  for (int i = 0; i < cols(); ++i) {
    if (labels[i] == label) return i;
  }
  return -1;
}

Dictionary build_polynomial_library(int state_dim, int max_degree) {
  if (state_dim < 1) throw std::invalid_argument("build_polynomial_library: state_dim must be >= 1");
  if (max_degree < 0) throw std::invalid_argument("build_polynomial_library: max_degree must be >= 0");
  Dictionary dict;
  dict.state_dim = state_dim;
  for (int d = 0; d <= max_degree; ++d) append_monomials_of_degree(state_dim, d, dict.terms);
  for (Term& t : dict.terms) t.label = term_label(t, state_dim);
  return dict;
}

Dictionary build_lorenz_paper_library() {
  Dictionary dict = build_polynomial_library(3, 3);
  for (int v = 0; v < 3; ++v) {
    for (int f = 1; f <= 2; ++f) {
      for (Term::Kind k : {Term::Kind::sine, Term::Kind::cosine}) {
        Term t;
        t.kind = k;
        t.exponents.assign(3, 0);
        t.frequency = f;
        t.variable = v;
        t.label = term_label(t, 3);
        dict.terms.push_back(t);
      }
    }
  }
  return dict;
}

Dictionary build_pde_trial_library(int max_power, int max_derivative) {
  if (max_power < 1) throw std::invalid_argument("build_pde_trial_library: max_power must be >= 1");
  if (max_derivative < 0) throw std::invalid_argument("build_pde_trial_library: max_derivative must be >= 0");
  Dictionary dict;
  dict.state_dim = 1;
  for (int a = 0; a <= max_derivative; ++a) {
    for (int e = 1; e <= max_power; ++e) {
      Term t;
      t.kind = Term::Kind::pde_trial;
      t.exponents = {e};
      t.derivative_order = a;
      t.label = term_label(t, 1);
      dict.terms.push_back(t);
    }
  }
  return dict;
}

EvaluatedLibrary evaluate(const Dictionary& dict, const Matrix& states) {
  if (states.cols() != dict.state_dim) {
    throw std::invalid_argument("evaluate: state dimension does not match dictionary");
  }
  if (!states.allFinite()) throw std::invalid_argument("evaluate: non-finite state values");
  const Eigen::Index m = states.rows();
  EvaluatedLibrary lib;
  lib.matrix.resize(m, dict.size());
  lib.labels = dict.labels();
  std::vector<double> row(dict.state_dim);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (int v = 0; v < dict.state_dim; ++v) row[v] = states(j, v);
    for (int i = 0; i < dict.size(); ++i) {
      lib.matrix(j, i) = eval_term(dict.terms[i], row.data(), dict.state_dim);
    }
  }
  return lib;
}

EvaluatedLibrary evaluate(const Dictionary& dict, const TrajectoryDataset& data) {
  return evaluate(dict, data.states);
}

EvaluatedLibrary normalize_columns(const EvaluatedLibrary& lib) {
  if (lib.is_normalized()) return lib;
  EvaluatedLibrary out = lib;
  out.scales.resize(lib.cols());
  for (int i = 0; i < lib.cols(); ++i) {
    const double s = lib.matrix.col(i).norm();
    if (s <= 0.0) {
      throw std::invalid_argument("normalize_columns: zero column for term '" + lib.labels[i] + "'");
    }
    out.scales[i] = s;
    out.matrix.col(i) /= s;
  }
  return out;
}

EvaluatedLibrary unnormalize_columns(const EvaluatedLibrary& lib) {
  if (!lib.is_normalized()) return lib;
  EvaluatedLibrary out = lib;
  for (int i = 0; i < lib.cols(); ++i) out.matrix.col(i) *= lib.scales[i];
  out.scales.clear();
  return out;
}

PrunedLibrary drop_dependent_columns(const EvaluatedLibrary& lib, double rank_tol) {
  const detail::MgsQr qr = detail::mgs_qr(lib.matrix, rank_tol);
  PrunedLibrary out;
  if (qr.dropped.empty()) {
    out.lib = lib;
    return out;
  }
  out.lib.matrix.resize(lib.matrix.rows(), static_cast<Eigen::Index>(qr.kept.size()));
  for (std::size_t k = 0; k < qr.kept.size(); ++k) {
    out.lib.matrix.col(static_cast<Eigen::Index>(k)) = lib.matrix.col(qr.kept[k]);
    out.lib.labels.push_back(lib.labels[qr.kept[k]]);
    if (lib.is_normalized()) out.lib.scales.push_back(lib.scales[qr.kept[k]]);
  }
  for (int j : qr.dropped) out.dropped_labels.push_back(lib.labels[j]);
  return out;
}

Vector coefficients_to_raw_scale(const EvaluatedLibrary& lib, const Vector& coefficients) {
  if (coefficients.size() != lib.cols()) {
    throw std::invalid_argument("coefficients_to_raw_scale: length mismatch");
  }
  if (!lib.is_normalized()) return coefficients;
  Vector out = coefficients;
  for (int i = 0; i < lib.cols(); ++i) out[i] /= lib.scales[i];
  return out;
}

}  // namespace dictsel
