// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: load problem files, run the analysis pipeline and
// emit human-readable or JSON reports. Reports are byte-deterministic for a
// fixed (input, seed, version); wall-clock timing therefore goes to stderr.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nlpcanon/autodiff.hpp"
#include "nlpcanon/canonical_form.hpp"
#include "nlpcanon/change_of_vars.hpp"
#include "nlpcanon/errors.hpp"
#include "nlpcanon/nlp_analysis.hpp"
#include "nlpcanon/quadratic_forms.hpp"
#include "nlpcanon/rank_one.hpp"

using json = nlohmann::json;
using namespace nlpcanon;

namespace {

constexpr const char* kSchema = "nlpcanon/1";

struct Options {
  bool json_output = false;
  std::uint64_t seed = 0;
  double tol = 1e-8;
  int samples = 1000;
  int jobs = 1;
  int count = 10;         // invariance: number of generated maps
  double magnitude = 0.1; // invariance: quadratic term size
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fnv1a_digest(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a:%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

json mat_json(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt_vec(const Vec& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt(v[i]);
  }
  return out + "]";
}

void emit(const json& report, const Options& opt, std::ostream& os) {
  if (opt.json_output) {
    os << report.dump(2) << "\n";
    return;
  }
  // Human-readable rendering of the same content.
  os << report["command"].get<std::string>();
  if (report.contains("input"))
    os << " " << report["input"].get<std::string>();
  os << "\n";
  if (report.contains("checks"))
    for (const auto& check : report["checks"]) {
      os << "  " << check["name"].get<std::string>() << ": "
         << (check["pass"].get<bool>() ? "pass" : "FAIL");
      if (check.contains("detail"))
        os << "  " << check["detail"].get<std::string>();
      os << "\n";
    }
  if (report.contains("error"))
    os << "  error: " << report["error"].get<std::string>() << "\n";
  os << "  result: " << report["status"].get<std::string>() << "\n";
}

json check_entry(const std::string& name, bool pass,
                 const std::string& detail) {
  json c;
  c["name"] = name;
  c["pass"] = pass;
  c["detail"] = detail;
  return c;
}

// ---------------------------------------------------------------------------
// analyze

json analyze_one(const std::string& path, const Options& opt, int& exit_code) {
  json report;
  report["schema"] = kSchema;
  report["command"] = "analyze";
  report["input"] = path;
  report["seed"] = opt.seed;
  report["tolerances"] = {{"tol", opt.tol}, {"samples", opt.samples}};
  json checks = json::array();
  exit_code = 0;
  try {
    const std::string text = read_file(path);
    report["digest"] = fnv1a_digest(text);
    const NLPInstance instance(parse_problem(text));
    report["dimensions"] = {{"n", instance.n()},
                            {"m", instance.num_equalities()},
                            {"inequalities", instance.num_inequalities()}};

    const MFCQReport mfcq = check_mfcq(instance, opt.tol);
    json jm = check_entry(
        "mfcq", mfcq.satisfied,
        "rank(Dh)=" + std::to_string(mfcq.rank_dh) +
            " margin=" + fmt(mfcq.margin) +
            (mfcq.witness.empty() ? "" : " witness=" + fmt_vec(mfcq.witness)));
    jm["rank_dh"] = mfcq.rank_dh;
    jm["margin"] = finite_or_null(mfcq.margin);
    jm["witness"] = vec_json(mfcq.witness);
    checks.push_back(jm);
    if (!mfcq.satisfied) {
      report["checks"] = checks;
      report["status"] = "hypothesis-failed";
      report["error"] = "mfcq: failed";
      exit_code = 1;
      return report;
    }

    const RankDeviationReport rd =
        check_rank_deviation(instance, std::max(200, opt.samples), opt.tol,
                             opt.seed);
    json jr = check_entry("rank-deviation", rd.within_one,
                          "base=" + std::to_string(rd.base_rank) +
                              " max=" + std::to_string(rd.max_rank));
    jr["base_rank"] = rd.base_rank;
    jr["max_rank"] = rd.max_rank;
    jr["argmax"] = vec_json(rd.argmax);
    checks.push_back(jr);
    if (!rd.within_one) {
      report["checks"] = checks;
      report["status"] = "hypothesis-failed";
      report["error"] = "rank-deviation: failed";
      exit_code = 1;
      return report;
    }

    {
      const CanonicalChart chart = build_canonical_chart(instance, opt.tol);
      const ChartResidualReport res =
          canonical_residuals(chart, std::min(opt.samples, 200), opt.seed);
      json jc = check_entry(
          "chart", res.max_h_residual <= 1e-9 && res.max_g_residual <= 1e-9,
          "r=" + std::to_string(chart.r()) + " p=" + std::to_string(chart.p()) +
              " |h-y|=" + fmt(res.max_h_residual) +
              " |g-z|=" + fmt(res.max_g_residual) +
              " |Dwc(0)|=" + fmt(res.dwc_inf_norm));
      jc["max_h_residual"] = res.max_h_residual;
      jc["max_g_residual"] = res.max_g_residual;
      jc["dwc_inf_norm"] = res.dwc_inf_norm;
      jc["rank_identity"] = res.rank_identity;
      checks.push_back(jc);
    }

    const AndreaniCertificate cert =
        andreani_certificate(instance, opt.tol, opt.seed);
    json jmin = check_entry("minimality-sample", cert.minimality_ok,
                            "worst-gap=" + fmt(cert.minimality_worst) +
                                " samples=" +
                                std::to_string(cert.minimality_samples));
    jmin["worst_gap"] = cert.minimality_worst;
    jmin["samples"] = cert.minimality_samples;
    checks.push_back(jmin);

    const WeakSecondOrderReport weak =
        verify_weak_second_order(instance, cert, opt.samples, opt.tol,
                                 opt.seed);
    json jw = check_entry(
        "weak-second-order", weak.passed,
        "min-S=" + fmt(weak.min_s) +
            " kernel-dim=" + std::to_string(weak.kernel_dim) +
            " kernel-lambda-min=" + fmt(weak.kernel_lambda_min));
    jw["min_s"] = weak.min_s;
    jw["kernel_dim"] = weak.kernel_dim;
    jw["kernel_lambda_min"] = weak.kernel_lambda_min;
    checks.push_back(jw);

    json jcert;
    jcert["lambda"] = vec_json(cert.lambda);
    jcert["mu"] = vec_json(cert.mu);
    jcert["gamma"] = cert.gamma;
    jcert["alpha"] = vec_json(cert.alpha);
    jcert["coupling"] = mat_json(cert.coupling);
    jcert["interval"] = {cert.interval.lo, cert.interval.hi};
    {
      json perm = json::array();
      for (int i : cert.permutation) perm.push_back(i + 1);  // 1-based
      jcert["permutation"] = perm;
    }
    jcert["completing"] = cert.completing;
    jcert["wdim"] = cert.wdim;
    jcert["kkt_residual"] = cert.kkt;
    jcert["separation_lambda_min"] = cert.separation_lambda_min;
    jcert["factor_residual"] = cert.factor_residual;
    jcert["family_zero"] = cert.family_zero;
    jcert["chart_radius"] = cert.chart_radius;
    jcert["interval_cap_bound"] = cert.interval_cap_bound;
    report["certificate"] = jcert;

    report["checks"] = checks;
    const bool ok = weak.passed;
    report["status"] = ok ? "certificate-verified" : "verification-failed";
    exit_code = ok ? 0 : 1;
    return report;
  } catch (const ParseError& e) {
    report["status"] = "input-error";
    report["error"] = e.what();
    exit_code = 2;
  } catch (const ActivityError& e) {
    report["status"] = "input-error";
    report["error"] = e.what();
    exit_code = 2;
  } catch (const SeparationFailed& e) {
    report["checks"] = checks;
    report["status"] = "hypothesis-failed";
    report["error"] = std::string("separation-failed: ") + e.what();
    report["witness"] = vec_json(e.witness());
    exit_code = 1;
  } catch (const Error& e) {
    report["checks"] = checks;
    report["status"] = "hypothesis-failed";
    report["error"] = e.what();
    exit_code = 1;
  } catch (const std::exception& e) {
    report["status"] = "input-error";
    report["error"] = e.what();
    exit_code = 2;
  }
  return report;
}

int cmd_analyze(const std::vector<std::string>& paths, const Options& opt) {
  std::vector<json> reports(paths.size());
  std::vector<int> codes(paths.size(), 0);
  const int jobs = std::max(1, opt.jobs);
  if (jobs == 1 || paths.size() <= 1) {
    for (std::size_t i = 0; i < paths.size(); ++i)
      reports[i] = analyze_one(paths[i], opt, codes[i]);
  } else {
    std::vector<std::thread> pool;
    std::size_t next = 0;
    std::mutex mu;
    for (int t = 0; t < jobs; ++t)
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i;
          {
            std::lock_guard<std::mutex> lock(mu);
            if (next >= paths.size()) return;
            i = next++;
          }
          reports[i] = analyze_one(paths[i], opt, codes[i]);
        }
      });
    for (auto& th : pool) th.join();
  }
  int exit_code = 0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    emit(reports[i], opt, std::cout);
    exit_code = std::max(exit_code, codes[i]);
  }
  return exit_code;
}

// ---------------------------------------------------------------------------
// chart

int cmd_chart(const std::string& path, const Options& opt) {
  json report;
  report["schema"] = kSchema;
  report["command"] = "chart";
  report["input"] = path;
  report["seed"] = opt.seed;
  report["tolerances"] = {{"tol", opt.tol}, {"samples", opt.samples}};
  int exit_code = 0;
  try {
    const std::string text = read_file(path);
    report["digest"] = fnv1a_digest(text);
    const NLPInstance instance(parse_problem(text));
    const CanonicalChart chart = build_canonical_chart(instance, opt.tol);
    const ChartResidualReport res =
        canonical_residuals(chart, opt.samples, opt.seed);
    json checks = json::array();
    json jc = check_entry(
        "chart-residuals",
        res.max_h_residual <= 1e-9 && res.max_g_residual <= 1e-9 &&
            res.dwc_inf_norm <= 1e-6,
        "|h-y|=" + fmt(res.max_h_residual) + " |g-z|=" +
            fmt(res.max_g_residual) + " |Dwc(0)|=" + fmt(res.dwc_inf_norm) +
            " used=" + std::to_string(res.samples_used) + " excluded=" +
            std::to_string(res.samples_excluded));
    jc["max_h_residual"] = res.max_h_residual;
    jc["max_g_residual"] = res.max_g_residual;
    jc["dwc_inf_norm"] = res.dwc_inf_norm;
    jc["samples_used"] = res.samples_used;
    jc["samples_excluded"] = res.samples_excluded;
    jc["rank_identity"] = res.rank_identity;
    checks.push_back(jc);
    report["checks"] = checks;
    json perm = json::array();
    for (int i : chart.permutation()) perm.push_back(i + 1);
    report["chart"] = {{"permutation", perm},
                       {"completing", chart.r()},
                       {"p", chart.p()},
                       {"wdim", chart.wdim()},
                       {"radius", chart.radius()},
                       {"complement_basis", mat_json(chart.complement_basis())}};
    const bool ok = jc["pass"].get<bool>();
    report["status"] = ok ? "chart-verified" : "chart-residuals-too-large";
    exit_code = ok ? 0 : 1;
  } catch (const ParseError& e) {
    report["status"] = "input-error";
    report["error"] = e.what();
    exit_code = 2;
  } catch (const ActivityError& e) {
    report["status"] = "input-error";
    report["error"] = e.what();
    exit_code = 2;
  } catch (const Error& e) {
    report["status"] = "hypothesis-failed";
    report["error"] = e.what();
    exit_code = 1;
  } catch (const std::exception& e) {
    report["status"] = "input-error";
    report["error"] = e.what();
    exit_code = 2;
  }
  emit(report, opt, std::cout);
  return exit_code;
}

// ---------------------------------------------------------------------------
// separate

std::pair<Mat, Mat> read_matrix_pair(const std::string& text) {
  std::istringstream in(text);
  auto read_one = [&in]() {
    int n = 0;
    if (!(in >> n) || n <= 0) throw ParseError("expected matrix order", 0);
    Mat m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (!(in >> m(i, j)))
          throw ParseError("expected matrix entry", 0);
    return m;
  };
  const Mat a = read_one();
  const Mat b = read_one();
  return {a, b};
}

int cmd_separate(const std::string& path, double lo, double hi,
                 const Options& opt) {
  json report;
  report["schema"] = kSchema;
  report["command"] = "separate";
  report["input"] = path;
  report["seed"] = opt.seed;
  report["tolerances"] = {{"tol", opt.tol}, {"samples", opt.samples}};
  report["interval"] = {lo, hi};
  int exit_code = 0;
  try {
    const std::string text = read_file(path);
    report["digest"] = fnv1a_digest(text);
    const auto [a, b] = read_matrix_pair(text);
    const SeparationResult sep =
        semidefinite_separation(a, b, Interval{lo, hi}, opt.tol);
    json checks = json::array();
    json jc = check_entry("separation", true,
                          "gamma*=" + fmt(sep.gamma_star) + " lambda_min=" +
                              fmt(sep.certificate_lambda_min));
    jc["gamma_star"] = sep.gamma_star;
    jc["lambda_min"] = sep.certificate_lambda_min;
    jc["mode"] = "semidefinite";
    jc["regularized_gammas"] = {sep.regularized_gammas[0],
                                sep.regularized_gammas[1],
                                sep.regularized_gammas[2]};
    checks.push_back(jc);
    report["checks"] = checks;
    report["status"] = "separated";
  } catch (const ParseError& e) {
    report["status"] = "input-error";
    report["error"] = e.what();
    exit_code = 2;
  } catch (const HypothesisViolated& e) {
    report["status"] = "hypothesis-failed";
    report["error"] = e.what();
    report["witness"] = vec_json(e.witness());
    exit_code = 1;
  } catch (const Error& e) {
    report["status"] = "hypothesis-failed";
    report["error"] = e.what();
    exit_code = 1;
  } catch (const std::exception& e) {
    report["status"] = "input-error";
    report["error"] = e.what();
    exit_code = 2;
  }
  emit(report, opt, std::cout);
  return exit_code;
}

// ---------------------------------------------------------------------------
// invariance

int cmd_invariance(const std::string& path, const Options& opt) {
  json report;
  report["schema"] = kSchema;
  report["command"] = "invariance";
  report["input"] = path;
  report["seed"] = opt.seed;
  report["tolerances"] = {{"tol", opt.tol},
                          {"samples", opt.samples},
                          {"count", opt.count},
                          {"magnitude", opt.magnitude}};
  int exit_code = 0;
  try {
    const std::string text = read_file(path);
    report["digest"] = fnv1a_digest(text);
    const NLPInstance instance(parse_problem(text));

    // A canonical multiplier pair from the polytope, when one exists.
    bool have_multipliers = true;
    Vec lambda, mu;
    try {
      Vec coeffs(static_cast<std::size_t>(instance.num_inequalities()), 0.0);
      multiplier_mu_bounds(instance, coeffs);  // probes feasibility
      const AndreaniCertificate cert =
          andreani_certificate(instance, opt.tol, opt.seed);
      lambda = cert.lambda;
      mu = cert.mu;
    } catch (const Error&) {
      have_multipliers = false;
    }

    json checks = json::array();
    bool all_pass = true;
    for (int k = 0; k < opt.count; ++k) {
      const std::uint64_t map_seed = opt.seed + 1000003ull * (k + 1);
      const Diffeomorphism q = random_diffeomorphism(
          instance.n(), map_seed, opt.magnitude, instance.radius());
      Rng rng(map_seed ^ 0xfeedULL);
      std::vector<Vec> points;
      for (int s = 0; s < 5; ++s)
        points.push_back(rng.ball_point(instance.n(), 0.3 * q.radius()));
      const ChainRuleReport chain = verify_chain_rules(instance, q, points);
      bool pass = chain.pass();
      std::string detail =
          "linGrad=" + fmt(chain.lin_grad) + " linHess=" + fmt(chain.lin_hess) +
          " nonGrad=" + fmt(chain.non_grad) + " nonHess=" +
          fmt(chain.non_hess) + " fdGrad=" + fmt(chain.fd_grad) + " fdHess=" +
          fmt(chain.fd_hess);
      json jc = check_entry("chain-rules[" + std::to_string(k) + "]", pass,
                            detail);
      jc["lin_grad"] = chain.lin_grad;
      jc["lin_hess"] = chain.lin_hess;
      jc["non_grad"] = chain.non_grad;
      jc["non_hess"] = chain.non_hess;
      jc["fd_grad"] = chain.fd_grad;
      jc["fd_hess"] = chain.fd_hess;
      checks.push_back(jc);
      all_pass = all_pass && pass;

      if (have_multipliers) {
        const MultiplierInvarianceReport minv = verify_multiplier_invariance(
            instance, q, lambda, mu, opt.tol);
        const bool mpass = minv.equivalent() && minv.source_holds;
        json jmv = check_entry(
            "multiplier-invariance[" + std::to_string(k) + "]", mpass,
            "source=" + fmt(minv.residual_source) + " transformed=" +
                fmt(minv.residual_transformed) + " cond=" +
                fmt(minv.condition));
        jmv["residual_source"] = minv.residual_source;
        jmv["residual_transformed"] = minv.residual_transformed;
        jmv["condition"] = minv.condition;
        checks.push_back(jmv);
        all_pass = all_pass && mpass;

        const SecondOrderInvarianceReport sinv =
            verify_second_order_invariance(instance, q, lambda, mu,
                                           opt.samples, 1e-6, map_seed);
        json jsv = check_entry(
            "second-order-invariance[" + std::to_string(k) + "]", sinv.passed,
            "max-deviation=" + fmt(sinv.max_deviation) + " kernel-dim=" +
                std::to_string(sinv.kernel_dim_source));
        jsv["max_deviation"] = sinv.max_deviation;
        jsv["kernel_dim_source"] = sinv.kernel_dim_source;
        jsv["kernel_dim_transformed"] = sinv.kernel_dim_transformed;
        jsv["kernel_correspondence"] = sinv.kernel_correspondence;
        checks.push_back(jsv);
        all_pass = all_pass && sinv.passed;
      }
    }
    report["multipliers_available"] = have_multipliers;
    if (have_multipliers) {
      report["lambda"] = vec_json(lambda);
      report["mu"] = vec_json(mu);
    }
    report["checks"] = checks;
    report["status"] = all_pass ? "invariance-verified" : "invariance-failed";
    exit_code = all_pass ? 0 : 1;
  } catch (const ParseError& e) {
    report["status"] = "input-error";
    report["error"] = e.what();
    exit_code = 2;
  } catch (const ActivityError& e) {
    report["status"] = "input-error";
    report["error"] = e.what();
    exit_code = 2;
  } catch (const Error& e) {
    report["status"] = "hypothesis-failed";
    report["error"] = e.what();
    exit_code = 1;
  } catch (const std::exception& e) {
    report["status"] = "input-error";
    report["error"] = e.what();
    exit_code = 2;
  }
  emit(report, opt, std::cout);
  return exit_code;
}

// ---------------------------------------------------------------------------
// factor-hessians

int cmd_factor_hessians(const std::string& path, const Options& opt) {
  json report;
  report["schema"] = kSchema;
  report["command"] = "factor-hessians";
  report["input"] = path;
  report["seed"] = opt.seed;
  report["tolerances"] = {{"tol", opt.tol}, {"samples", opt.samples}};
  int exit_code = 0;
  try {
    const std::string text = read_file(path);
    report["digest"] = fnv1a_digest(text);
    const NLPInstance instance(parse_problem(text));
    const RankOneFactorization fac =
        factor_hessian_family(instance.inequalities(), opt.tol,
                              instance.radius(),
                              std::max(200, opt.samples), opt.seed);
    json checks = json::array();
    json jc = check_entry("factorization", true,
                          "alpha=" + fmt_vec(fac.alphas) + " residual=" +
                              fmt(fac.residual) +
                              (fac.zero_family ? " (zero family)" : ""));
    jc["alpha"] = vec_json(fac.alphas);
    jc["coupling"] = mat_json(fac.coupling);
    jc["residual"] = fac.residual;
    jc["zero_family"] = fac.zero_family;
    checks.push_back(jc);
    report["checks"] = checks;
    report["status"] = "factored";
  } catch (const ParseError& e) {
    report["status"] = "input-error";
    report["error"] = e.what();
    exit_code = 2;
  } catch (const ActivityError& e) {
    report["status"] = "input-error";
    report["error"] = e.what();
    exit_code = 2;
  } catch (const NotProportional& e) {
    report["status"] = "hypothesis-failed";
    report["error"] = e.what();
    report["worst_index"] = e.worst_index() + 1;
    report["residual"] = e.residual();
    report["direction"] = vec_json(e.direction());
    exit_code = 1;
  } catch (const Error& e) {
    report["status"] = "hypothesis-failed";
    report["error"] = e.what();
    exit_code = 1;
  } catch (const std::exception& e) {
    report["status"] = "input-error";
    report["error"] = e.what();
    exit_code = 2;
  }
  emit(report, opt, std::cout);
  return exit_code;
}

// ---------------------------------------------------------------------------
// check-mfcq

int cmd_check_mfcq(const std::string& path, const Options& opt) {
  json report;
  report["schema"] = kSchema;
  report["command"] = "check-mfcq";
  report["input"] = path;
  report["seed"] = opt.seed;
  report["tolerances"] = {{"tol", opt.tol}};
  int exit_code = 0;
  try {
    const std::string text = read_file(path);
    report["digest"] = fnv1a_digest(text);
    const NLPInstance instance(parse_problem(text));
    const MFCQReport mfcq = check_mfcq(instance, opt.tol);
    json checks = json::array();
    json jm = check_entry(
        "mfcq", mfcq.satisfied,
        "rank(Dh)=" + std::to_string(mfcq.rank_dh) + " margin=" +
            fmt(mfcq.margin) +
            (mfcq.witness.empty() ? "" : " witness=" + fmt_vec(mfcq.witness)));
    jm["rank_dh"] = mfcq.rank_dh;
    jm["margin"] = finite_or_null(mfcq.margin);
    jm["witness"] = vec_json(mfcq.witness);
    checks.push_back(jm);
    report["checks"] = checks;
    report["status"] = mfcq.satisfied ? "mfcq-satisfied" : "mfcq-failed";
    exit_code = mfcq.satisfied ? 0 : 1;
  } catch (const ParseError& e) {
    report["status"] = "input-error";
    report["error"] = e.what();
    exit_code = 2;
  } catch (const ActivityError& e) {
    report["status"] = "input-error";
    report["error"] = e.what();
    exit_code = 2;
  } catch (const Error& e) {
    report["status"] = "hypothesis-failed";
    report["error"] = e.what();
    exit_code = 1;
  } catch (const std::exception& e) {
    report["status"] = "input-error";
    report["error"] = e.what();
    exit_code = 2;
  }
  emit(report, opt, std::cout);
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Canonical-form analysis of degenerate NLP instances"};
  app.require_subcommand(1);

  Options opt;
  app.add_flag("--json", opt.json_output, "emit JSON instead of text");
  app.add_option("--seed", opt.seed, "random seed (default 0)");
  app.add_option("--tol", opt.tol, "numeric tolerance (default 1e-8)");
  app.add_option("--samples", opt.samples, "sample count (default 1000)");

  std::vector<std::string> analyze_paths;
  auto* analyze = app.add_subcommand("analyze", "full certificate pipeline");
  analyze->add_option("files", analyze_paths, "problem files")->required();
  analyze->add_option("--jobs", opt.jobs, "instances processed in parallel");

  std::string chart_path;
  auto* chart = app.add_subcommand("chart", "canonical chart residuals");
  chart->add_option("file", chart_path, "problem file")->required();

  std::string sep_path;
  double sep_lo = 0.0, sep_hi = 0.0;
  auto* separate = app.add_subcommand("separate",
                                      "semidefinite separation of two forms");
  separate->add_option("file", sep_path, "matrix pair file")->required();
  separate->add_option("lo", sep_lo, "interval lower end")->required();
  separate->add_option("hi", sep_hi, "interval upper end")->required();

  std::string inv_path;
  auto* invariance = app.add_subcommand(
      "invariance", "chain-rule and multiplier invariance battery");
  invariance->add_option("file", inv_path, "problem file")->required();
  invariance->add_option("--count", opt.count, "generated maps (default 10)");
  invariance->add_option("--magnitude", opt.magnitude,
                         "quadratic term size (default 0.1)");

  std::string fh_path;
  auto* factor = app.add_subcommand("factor-hessians",
                                    "rank-one factor the inequality Hessians");
  factor->add_option("file", fh_path, "problem file")->required();

  std::string mfcq_path;
  auto* mfcq = app.add_subcommand("check-mfcq",
                                  "Mangasarian-Fromovitz check only");
  mfcq->add_option("file", mfcq_path, "problem file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto start = std::chrono::steady_clock::now();
  int code = 2;
  if (*analyze) code = cmd_analyze(analyze_paths, opt);
  if (*chart) code = cmd_chart(chart_path, opt);
  if (*separate) code = cmd_separate(sep_path, sep_lo, sep_hi, opt);
  if (*invariance) code = cmd_invariance(inv_path, opt);
  if (*factor) code = cmd_factor_hessians(fh_path, opt);
  if (*mfcq) code = cmd_check_mfcq(mfcq_path, opt);
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);
  // stderr keeps stdout byte-deterministic for fixed inputs.
  std::cerr << "elapsed_ms " << elapsed.count() << "\n";
  return code;
}
