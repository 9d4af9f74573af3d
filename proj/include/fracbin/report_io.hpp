#pragma once

// CSV and JSON encoders for Monte Carlo artifacts. Floats use 17 significant
// digits in CSV; JSON keys keep insertion order so artifacts are byte-stable.

#include <cstdio>
#include <optional>
#include <ostream>
#include <string>

#include "json.hpp"

#include "fracbin/diagnostics.hpp"

namespace fracbin {

using Json = nlohmann::ordered_json;

inline std::string format17(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

inline std::string format_stop(const std::optional<std::int64_t>& t) { return t ? std::to_string(*t) : "none"; }

/// N,H,path_index,T1,T2,T3,T4,TN,V_phi,V_psi,minV_psi,V_psi_lambda,lambda_N,c_N,C_N
inline void write_experiment_csv(std::ostream& out, const ExperimentResult& e) {
  out << "N,H,path_index,T1,T2,T3,T4,TN,V_phi,V_psi,minV_psi,V_psi_lambda,lambda_N,c_N,C_N\n";
  const auto& s = e.schedules;
  for (const auto& r : e.records) {
    out << e.N << ',' << format17(s.H) << ',' << r.path_index;
    for (const auto& t : r.stopping.T) out << ',' << format_stop(t);
    out << ',' << format_stop(r.stopping.TN) << ',' << format17(r.V_phi) << ',' << format17(r.V_psi) << ','
        << format17(r.min_V_psi) << ',' << format17(r.V_psi_lambda) << ',' << format17(s.lambda_N) << ','
        << format17(s.c_N) << ',' << format17(s.C_N) << '\n';
  }
}

inline Json to_json(const Estimate& e) { return Json{{"mean", e.mean}, {"se", e.se}, {"count", e.count}}; }

inline Json to_json(const RateFit& f) {
  return Json{{"log_x", f.log_x}, {"log_y", f.log_y}, {"slope", f.slope}, {"intercept", f.intercept},
              {"residual_norm", f.residual_norm}};
}

inline Json to_json(const ModelParams& p) {
  return Json{{"H", p.H}, {"sigma", p.sigma}, {"cH", p.cH}, {"s0", p.s0}, {"h", p.h()}, {"g", p.g()}};
}

inline Json to_json(const QuadratureConfig& q) {
  return Json{{"nodes_per_panel", q.nodes_per_panel}, {"max_panels", q.max_panels}, {"rel_tol", q.rel_tol},
              {"abs_tol", q.abs_tol}};
}

inline Json to_json(const ThetaLimit& t) {
  return Json{{"theta", t.theta}, {"V4", t.V4}, {"V3", t.V3}, {"head_terms", t.head_terms},
              {"tail_bound", t.tail_bound}};
}

inline Json to_json(const Schedules& s) {
  return Json{{"N", s.N},         {"H", s.H},         {"kappa", s.kappa},     {"eps_multiplier", s.eps_multiplier},
              {"eps_N", s.eps_N}, {"B12", s.B12},     {"c_hat_N", s.c_hat_N}, {"c_N", s.c_N},
              {"C_N", s.C_N},     {"lambda_N", s.lambda_N}};
}

inline Json to_json(const ConvergenceReport& report) {
  Json rows = Json::array();
  for (const auto& row : report.rows) {
    Json terms = Json::array();
    Json stops = Json::array();
    for (const auto& t : row.term) terms.push_back(to_json(t));
    for (const auto& t : row.p_T) stops.push_back(to_json(t));
    rows.push_back(Json{{"N", row.N},
                        {"schedules", to_json(row.schedules)},
                        {"S_over_N", terms},
                        {"V_phi", to_json(row.V_phi)},
                        {"P_V_phi_above_0.75_theta", to_json(row.p_phi_above_075)},
                        {"P_V_phi_above_0.5_theta", to_json(row.p_phi_above_050)},
                        {"P_V_psi_at_least_C_N", to_json(row.p_psi_success)},
                        {"admissibility_violations", row.admissibility_violations},
                        {"C_N_lambda", row.C_N_lambda},
                        {"P_friction_success", to_json(row.p_friction_success)},
                        {"P_T_i_at_most_N", stops},
                        {"P_T_N_at_most_N", to_json(row.p_TN)}});
  }
  return Json{{"limit", to_json(report.limit)},
              {"term_targets", report.term_target},
              {"c_star", report.c_star},
              {"rows", rows}};
}

inline Json to_json(const MaxInequalityReport& report) {
  Json rows = Json::array();
  for (const auto& row : report.rows) {
    Json stops = Json::array();
    for (int t = 0; t < 4; ++t) stops.push_back(Json{{"P", to_json(row.p_T[t])}, {"shape", row.p_T_shape[t]}});
    rows.push_back(Json{{"N", row.N},
                        {"E_sup_Sstar_sq", to_json(row.sup_Sstar_sq)},
                        {"lnN_N_pow_4H_minus_2", row.shape},
                        {"Sstar_N", to_json(row.Sstar_N)},
                        {"stopping", stops},
                        {"var_S1_over_N", row.var_S1_over_N},
                        {"P_sup_S1_over_N_above_eps", to_json(row.p_sup_S1_above_eps)},
                        {"kolmogorov_bound", row.kolmogorov_bound}});
  }
  return Json{{"fit", to_json(report.fit)}, {"rows", rows}};
}

inline Json to_json(const FrictionRateReport& report) {
  Json rows = Json::array();
  for (const auto& row : report.rows) {
    Json vs = Json::array();
    for (const auto& v : row.max_abs_Vs) vs.push_back(to_json(v));
    rows.push_back(Json{{"N", row.N}, {"E_max_abs_Vs", vs}, {"max_ledger_identity_error", row.max_ledger_identity_error}});
  }
  Json fits = Json::array();
  for (const auto& f : report.fits) fits.push_back(to_json(f));
  return Json{{"fits", fits}, {"rows", rows}};
}

}  // namespace fracbin
