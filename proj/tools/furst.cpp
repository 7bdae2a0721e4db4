// Command-line front end for the Furstenberg-measure laboratory.
//
// Subcommands: example, lyapunov, stationary, detail, certificate, renewal,
// pingpong, entropy, checks. Every run emits a JSON document embedding its
// full configuration, seed and build id; curves are written as CSV.
// Exit codes: 0 success, 2 a verification check failed, 1 usage/engine error.

#include <CLI11.hpp>
#include <json.hpp>

#include "furstenberg/certificate.hpp"
#include "furstenberg/checks.hpp"
#include "furstenberg/circle.hpp"
#include "furstenberg/measure_spec.hpp"
#include "furstenberg/walk.hpp"
#include "furstenberg/words.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kSchemaVersion = "1";

struct CommonOpts {
    std::uint64_t seed = 1;
    int workers = 1;
    std::string input = "-";
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_input = true) {
    cmd->add_option("--seed", o.seed, "Master RNG seed")
        ->envname("FURSTENBERG_SEED")
        ->capture_default_str();
    cmd->add_option("--workers", o.workers, "Worker threads")
        ->envname("FURSTENBERG_WORKERS")
        ->check(CLI::Range(1, 256))
        ->capture_default_str();
    if (with_input)
        cmd->add_option("--input", o.input,
                        "Measure spec JSON file ('-' reads stdin)")
            ->capture_default_str();
    cmd->add_option("--out", o.out_dir, "Output directory (default: stdout)")
        ->envname("FURSTENBERG_OUT");
}

std::string slurp(const std::string& path) {
    if (path == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

furst::MeasureSpec load_spec(const CommonOpts& o) {
    return furst::MeasureSpec::from_json(slurp(o.input));
}

json report_shell(const std::string& command, const json& config) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["build_id"] = FURSTENBERG_BUILD_ID;
    j["command"] = command;
    j["config"] = config;
    return j;
}

void emit(const json& j, const CommonOpts& o, const std::string& filename) {
    if (o.out_dir.empty()) {
        std::cout << j.dump(2) << "\n";
        return;
    }
    fs::create_directories(o.out_dir);
    std::ofstream out(fs::path(o.out_dir) / filename);
    out << j.dump(2) << "\n";
}

void emit_text(const std::string& text, const CommonOpts& o,
               const std::string& filename) {
    if (o.out_dir.empty()) return;
    fs::create_directories(o.out_dir);
    std::ofstream out(fs::path(o.out_dir) / filename);
    out << text;
}

// Provenance comment for CSV companions; every output file carries the
// config, seed and build id.
std::string csv_provenance(const std::string& command, const CommonOpts& o) {
    std::ostringstream ss;
    ss << "# schema_version=" << kSchemaVersion << " build_id="
       << FURSTENBERG_BUILD_ID << " command=" << command << " seed=" << o.seed
       << " workers=" << o.workers << " input=" << o.input << "\n";
    return ss.str();
}

json common_config(const CommonOpts& o) {
    json c;
    c["seed"] = o.seed;
    c["workers"] = o.workers;
    c["input"] = o.input;
    return c;
}

json lyapunov_json(const furst::LyapunovEstimate& e) {
    json j;
    j["chi_hat"] = e.chi_hat;
    j["std_error"] = e.std_error;
    j["steps_per_sample"] = e.steps_per_sample;
    j["samples"] = e.samples;
    j["positive"] = e.positive;
    return j;
}

json check_report_json(const furst::CheckReport& r) {
    json j;
    j["name"] = r.name;
    j["observed"] = r.observed;
    j["bound_or_target"] = r.bound_or_target;
    j["tolerance"] = r.tolerance;
    j["pass"] = r.pass;
    j["applicable"] = r.applicable;
    j["runs"] = r.runs;
    j["seed"] = r.seed;
    if (!r.notes.empty()) j["notes"] = r.notes;
    return j;
}

std::string detail_decay_csv(const furst::CertificateReport& rep) {
    std::ostringstream ss;
    ss << "r,s_r,log_inv_beta1,log_inv_beta2\n";
    ss.precision(17);
    for (const auto& p : rep.detail_decay)
        ss << p.r << "," << p.s_r << "," << p.log_inv_beta1 << ","
           << p.log_inv_beta2 << "\n";
    return ss.str();
}

std::string holder_csv(const furst::HolderFit& fit) {
    std::ostringstream ss;
    ss << "r,max_arc_mass_2r\n";
    ss.precision(17);
    for (std::size_t i = 0; i < fit.radii.size(); ++i)
        ss << fit.radii[i] << "," << fit.masses[i] << "\n";
    return ss.str();
}

std::string renewal_csv(const furst::RenewalTable& t) {
    std::ostringstream ss;
    ss << "p_level,uniformity_statistic\n";
    ss.precision(17);
    for (std::size_t j = 0; j < t.p_levels.size(); ++j)
        ss << t.p_levels[j] << "," << t.uniformity[j] << "\n";
    return ss.str();
}

json certificate_json(const furst::CertificateReport& rep) {
    json j;
    j["spec_name"] = rep.spec_name;
    j["chi"] = lyapunov_json(rep.chi);
    j["entropy_envelope"] = rep.entropy_envelope;
    j["support_sizes"] = rep.support_sizes;
    j["freeness_probe"] = rep.freeness_probe;
    j["h_used"] = rep.h_used;
    j["h_policy"] = rep.h_policy;
    j["log_m_bound"] = rep.log_m_bound;
    j["field_degree"] = rep.field_degree;
    j["max_entry_height"] = rep.max_entry_height;
    j["t_arc"] = rep.t_arc;
    j["alpha0_observed"] = rep.alpha0_observed;
    j["c_used"] = rep.c_used;
    j["condition_ratio"] = rep.condition_ratio;
    j["condition_holds"] = rep.condition_holds;
    j["holder_delta_fit"] = rep.holder.delta_fit;
    j["holder_degenerate"] = rep.holder.degenerate;
    if (rep.renewal) {
        j["renewal_uniformity"] = rep.renewal->uniformity;
        j["renewal_decreased"] = rep.renewal->decreased;
    }
    j["screen_common_fixed_pair"] = rep.screen.common_fixed_pair;
    j["screen_all_rotations"] = rep.screen.all_rotations;
    j["stationary_aborted"] = rep.stationary_aborted;
    j["degenerate"] = rep.degenerate;
    j["verdict"] = rep.verdict;
    json dd = json::array();
    for (const auto& p : rep.detail_decay) {
        json q;
        q["r"] = p.r;
        q["s_r"] = p.s_r;
        q["log_inv_beta1"] = p.log_inv_beta1;
        q["log_inv_beta2"] = p.log_inv_beta2;
        dd.push_back(q);
    }
    j["detail_decay"] = dd;
    return j;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical laboratory for Furstenberg measures on the "
                 "projective line"};
    app.require_subcommand(1);

    // ------------------------------------------------------------ example
    auto* cmd_example = app.add_subcommand(
        "example", "Construct a built-in measure family as exact JSON");
    CommonOpts ex_opts;
    std::string family = "two_gen";
    long ex_n = 3;
    double ex_r = 1.0;
    int ex_a = 5;
    int ex_steps = 1;
    std::vector<std::string> ex_elements;
    cmd_example->add_option("family", family,
                            "two_gen | rotational | large_element")
        ->required();
    cmd_example->add_option("--n", ex_n, "two_gen parameter n >= 2")
        ->capture_default_str();
    cmd_example->add_option("--r", ex_r, "large_element scale r >= 1")
        ->capture_default_str();
    cmd_example->add_option("--a", ex_a, "rotational symmetry order")
        ->capture_default_str();
    cmd_example->add_option("--steps", ex_steps, "large_element n (2^n atoms)")
        ->capture_default_str();
    cmd_example->add_option(
        "--element", ex_elements,
        "rotational base element as JSON 2x2 array of exact scalars");
    add_common(cmd_example, ex_opts, /*with_input=*/false);

    // ----------------------------------------------------------- lyapunov
    auto* cmd_lyap = app.add_subcommand("lyapunov",
                                        "Monte-Carlo Lyapunov exponent");
    CommonOpts ly_opts;
    int ly_steps = 10000, ly_samples = 200;
    cmd_lyap->add_option("--steps", ly_steps, "Steps per sample")
        ->check(CLI::Range(1000, 100000000))
        ->capture_default_str();
    cmd_lyap->add_option("--samples", ly_samples, "Independent samples")
        ->envname("FURSTENBERG_SAMPLES")
        ->check(CLI::Range(100, 100000000))
        ->capture_default_str();
    add_common(cmd_lyap, ly_opts);

    // --------------------------------------------------------- stationary
    auto* cmd_stat = app.add_subcommand(
        "stationary", "Empirical Furstenberg measure via Cartan attractors");
    CommonOpts st_opts;
    int st_burn = 2000, st_samples = 20000;
    double st_arc = 0.0;
    cmd_stat->add_option("--burn-in", st_burn, "Walk length per sample")
        ->envname("FURSTENBERG_BURN_IN")
        ->check(CLI::Range(200, 100000000))
        ->capture_default_str();
    cmd_stat->add_option("--samples", st_samples, "Sample count")
        ->envname("FURSTENBERG_SAMPLES")
        ->capture_default_str();
    cmd_stat->add_option("--arc-mass-t", st_arc,
                         "Also report max arc mass at this arc length");
    add_common(cmd_stat, st_opts);

    // --------------------------------------------------------------- detail
    auto* cmd_detail =
        app.add_subcommand("detail", "Order-k detail of a circle measure CSV");
    CommonOpts de_opts;
    double de_r = 0.01;
    int de_k = 1;
    cmd_detail->add_option("--r", de_r, "Scale r in (0, 1]")->required();
    cmd_detail->add_option("--k", de_k, "Order k in [1, 12]")
        ->capture_default_str();
    add_common(cmd_detail, de_opts);

    // ---------------------------------------------------------- certificate
    auto* cmd_cert = app.add_subcommand(
        "certificate",
        "Assemble chi, entropy envelope, splitting-rate bound and the "
        "main-condition ratio");
    CommonOpts ce_opts;
    double ce_t = 0.5, ce_c = 1.0;
    furst::CertificateBudgets budgets;
    cmd_cert->add_option("--t", ce_t, "Arc length for the non-degeneracy check")
        ->capture_default_str();
    cmd_cert->add_option("--C", ce_c, "Constant C in the condition")
        ->capture_default_str();
    cmd_cert->add_option("--steps", budgets.lyapunov_steps)
        ->capture_default_str();
    cmd_cert->add_option("--samples", budgets.stationary_samples)
        ->envname("FURSTENBERG_SAMPLES")
        ->capture_default_str();
    cmd_cert->add_option("--chi-samples", budgets.lyapunov_samples)
        ->capture_default_str();
    cmd_cert->add_option("--burn-in", budgets.burn_in)
        ->envname("FURSTENBERG_BURN_IN")
        ->capture_default_str();
    cmd_cert->add_option("--n-max", budgets.n_max)
        ->envname("FURSTENBERG_N_MAX")
        ->check(CLI::Range(1, 16))
        ->capture_default_str();
    cmd_cert->add_option("--renewal-runs", budgets.renewal_runs,
                         "0 disables the renewal curve")
        ->capture_default_str();
    add_common(cmd_cert, ce_opts);

    // -------------------------------------------------------------- renewal
    auto* cmd_renew = app.add_subcommand(
        "renewal", "Stopped-direction renewal laws over a v-grid");
    CommonOpts re_opts;
    std::vector<double> re_p{100.0, 10000.0};
    int re_runs = 1000, re_grid = 8;
    cmd_renew->add_option("--P", re_p, "P levels (>= 2)")->capture_default_str();
    cmd_renew->add_option("--runs", re_runs, "Runs per cell")
        ->envname("FURSTENBERG_RUNS")
        ->capture_default_str();
    cmd_renew->add_option("--grid", re_grid, "v-grid size (>= 8)")
        ->capture_default_str();
    add_common(cmd_renew, re_opts);

    // ------------------------------------------------------------- pingpong
    auto* cmd_ping = app.add_subcommand(
        "pingpong", "Certify free semigroup generation via disjoint arcs");
    CommonOpts pp_opts;
    std::vector<double> pp_theta, pp_lambda;
    double pp_eps = 0.2;
    cmd_ping->add_option("--theta", pp_theta, "Axis angles")->required();
    cmd_ping->add_option("--lambda", pp_lambda, "Expansions (> 1)")->required();
    cmd_ping->add_option("--epsilon", pp_eps, "Separation scale")
        ->capture_default_str();
    add_common(cmd_ping, pp_opts, /*with_input=*/false);

    // -------------------------------------------------------------- entropy
    auto* cmd_ent = app.add_subcommand(
        "entropy", "Exact H(mu^n)/n envelope by product enumeration");
    CommonOpts en_opts;
    int en_nmax = 8;
    cmd_ent->add_option("--n-max", en_nmax)
        ->envname("FURSTENBERG_N_MAX")
        ->check(CLI::Range(1, 24))
        ->capture_default_str();
    add_common(cmd_ent, en_opts);

    // --------------------------------------------------------------- checks
    auto* cmd_checks = app.add_subcommand(
        "checks", "Run the analysis-check battery (JSON lines)");
    CommonOpts ch_opts;
    add_common(cmd_checks, ch_opts, /*with_input=*/false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_example) {
            furst::MeasureSpec spec;
            json config = common_config(ex_opts);
            config["family"] = family;
            if (family == "two_gen") {
                config["n"] = ex_n;
                spec = furst::build_two_gen(ex_n);
            } else if (family == "rotational") {
                config["a"] = ex_a;
                std::vector<furst::ExactMatrix> elems;
                if (ex_elements.empty())
                    ex_elements = {R"([["6/5","0"],["0","5/6"]])"};
                for (const auto& etext : ex_elements) {
                    json em = json::parse(etext);
                    furst::ExactMatrix m(
                        furst::ExactScalar::parse(em[0][0]),
                        furst::ExactScalar::parse(em[0][1]),
                        furst::ExactScalar::parse(em[1][0]),
                        furst::ExactScalar::parse(em[1][1]));
                    elems.push_back(std::move(m));
                }
                config["elements"] = ex_elements;
                spec = furst::build_rotational(ex_a, elems);
            } else if (family == "large_element") {
                config["r"] = ex_r;
                config["steps"] = ex_steps;
                auto fam = furst::build_large_element(ex_r, ex_steps);
                config["prime"] = fam.prime;
                config["pingpong_certified"] = fam.bigs.certified;
                spec = fam.spec;
            } else {
                throw furst::ParameterOutOfScope("unknown family " + family);
            }
            // The spec JSON goes to stdout so it can be piped into the other
            // subcommands; the report wrapper goes to --out when given.
            std::cout << spec.to_json() << "\n";
            if (!ex_opts.out_dir.empty()) {
                json j = report_shell("example", config);
                j["spec"] = json::parse(spec.to_json());
                emit(j, ex_opts, "example.json");
            }
            return 0;
        }

        if (*cmd_lyap) {
            auto spec = load_spec(ly_opts);
            auto est = furst::estimate_lyapunov(spec, ly_steps, ly_samples,
                                                ly_opts.seed, ly_opts.workers);
            json config = common_config(ly_opts);
            config["steps"] = ly_steps;
            config["samples"] = ly_samples;
            config["spec"] = json::parse(spec.to_json());
            json j = report_shell("lyapunov", config);
            j["result"] = lyapunov_json(est);
            emit(j, ly_opts, "lyapunov.json");
            return 0;
        }

        if (*cmd_stat) {
            auto spec = load_spec(st_opts);
            auto est = furst::estimate_stationary(spec, st_burn, st_samples,
                                                  st_opts.seed, st_opts.workers);
            json config = common_config(st_opts);
            config["burn_in"] = st_burn;
            config["samples"] = st_samples;
            config["spec"] = json::parse(spec.to_json());
            json j = report_shell("stationary", config);
            j["result"]["samples"] = est.samples;
            j["result"]["aborted"] = est.aborted;
            if (st_arc > 0) {
                auto am = furst::arc_mass_max(est.measure, st_arc);
                j["result"]["arc_mass_t"] = st_arc;
                j["result"]["arc_mass_max"] = am.max_mass;
                j["result"]["arc_mass_argmax"] = am.arg_arc_start;
            }
            std::ostringstream csv;
            est.measure.save_csv(csv);
            if (st_opts.out_dir.empty()) {
                j["result"]["cloud_csv_inline"] = false;
                emit(j, st_opts, "stationary.json");
            } else {
                emit(j, st_opts, "stationary.json");
                emit_text(csv_provenance("stationary", st_opts) + csv.str(),
                          st_opts, "stationary_cloud.csv");
            }
            return 0;
        }

        if (*cmd_detail) {
            std::istringstream in(slurp(de_opts.input));
            auto measure = furst::CircleMeasure::load_csv(in);
            double value = furst::order_k_detail(measure, de_r, de_k);
            json config = common_config(de_opts);
            config["r"] = de_r;
            config["k"] = de_k;
            json j = report_shell("detail", config);
            j["result"]["detail"] = value;
            emit(j, de_opts, "detail.json");
            return 0;
        }

        if (*cmd_cert) {
            auto spec = load_spec(ce_opts);
            budgets.workers = ce_opts.workers;
            auto rep = furst::full_report(spec, ce_t, ce_c, budgets,
                                          ce_opts.seed);
            json config = common_config(ce_opts);
            config["t"] = ce_t;
            config["C"] = ce_c;
            config["budgets"] = {{"lyapunov_steps", budgets.lyapunov_steps},
                                 {"lyapunov_samples", budgets.lyapunov_samples},
                                 {"burn_in", budgets.burn_in},
                                 {"stationary_samples",
                                  budgets.stationary_samples},
                                 {"n_max", budgets.n_max},
                                 {"word_depth", budgets.word_depth},
                                 {"renewal_runs", budgets.renewal_runs}};
            config["spec"] = json::parse(spec.to_json());
            json j = report_shell("certificate", config);
            j["result"] = certificate_json(rep);
            emit(j, ce_opts, "certificate.json");
            std::string prov = csv_provenance("certificate", ce_opts);
            emit_text(prov + detail_decay_csv(rep), ce_opts,
                      "detail_decay.csv");
            emit_text(prov + holder_csv(rep.holder), ce_opts,
                      "holder_probe.csv");
            if (rep.renewal)
                emit_text(prov + renewal_csv(*rep.renewal), ce_opts,
                          "renewal_uniformity.csv");
            return 0;
        }

        if (*cmd_renew) {
            auto spec = load_spec(re_opts);
            std::vector<double> v_grid;
            for (int i = 0; i < re_grid; ++i)
                v_grid.push_back(i * furst::kPi / re_grid);
            auto table = furst::renewal_experiment(spec, v_grid, re_p, re_runs,
                                                   re_opts.seed,
                                                   re_opts.workers);
            json config = common_config(re_opts);
            config["P"] = re_p;
            config["runs"] = re_runs;
            config["grid"] = re_grid;
            config["spec"] = json::parse(spec.to_json());
            json j = report_shell("renewal", config);
            j["result"]["uniformity"] = table.uniformity;
            j["result"]["decreased"] = table.decreased;
            j["result"]["first_vs_last_se"] = table.first_vs_last_se;
            emit(j, re_opts, "renewal.json");
            emit_text(csv_provenance("renewal", re_opts) + renewal_csv(table),
                      re_opts, "renewal_uniformity.csv");
            return 0;
        }

        if (*cmd_ping) {
            if (pp_theta.size() != pp_lambda.size())
                throw CLI::ValidationError(
                    "--theta and --lambda must have equal counts");
            std::vector<std::pair<double, double>> elements;
            for (std::size_t i = 0; i < pp_theta.size(); ++i)
                elements.emplace_back(pp_theta[i], pp_lambda[i]);
            auto cert = furst::pingpong_certify(elements, pp_eps);
            json config = common_config(pp_opts);
            config["theta"] = pp_theta;
            config["lambda"] = pp_lambda;
            config["epsilon"] = pp_eps;
            json j = report_shell("pingpong", config);
            j["result"]["certified"] = cert.certified;
            j["result"]["deltas"] = cert.deltas;
            j["result"]["min_gap"] = cert.min_gap;
            if (cert.certified) {
                j["result"]["h_rw_uniform"] = cert.h_rw();
            } else {
                j["result"]["refusal"] = cert.refusal;
                j["result"]["offending"] = {cert.offending.first,
                                            cert.offending.second};
            }
            emit(j, pp_opts, "pingpong.json");
            return cert.certified ? 0 : 2;
        }

        if (*cmd_ent) {
            auto spec = load_spec(en_opts);
            auto env = furst::exact_product_entropy(spec, en_nmax);
            json config = common_config(en_opts);
            config["n_max"] = en_nmax;
            config["spec"] = json::parse(spec.to_json());
            json j = report_shell("entropy", config);
            j["result"]["h_over_n"] = env.h_over_n;
            j["result"]["support_sizes"] = env.support_sizes;
            std::vector<int> distinct(env.all_distinct.begin(),
                                      env.all_distinct.end());
            j["result"]["all_distinct"] = distinct;
            j["result"]["note"] =
                "finite-n values upper-bound the random walk entropy";
            emit(j, en_opts, "entropy.json");
            return 0;
        }

        if (*cmd_checks) {
            auto reports = furst::run_all_checks(ch_opts.seed);
            bool failed = false;
            std::ostringstream lines;
            for (const auto& r : reports) {
                if (!r.pass && r.applicable) failed = true;
                lines << check_report_json(r).dump() << "\n";
            }
            json config = common_config(ch_opts);
            json j = report_shell("checks", config);
            j["result"]["total"] = reports.size();
            j["result"]["failed"] = failed;
            if (ch_opts.out_dir.empty()) {
                std::cout << lines.str();
            } else {
                emit(j, ch_opts, "checks.json");
                emit_text(lines.str(), ch_opts, "checks.jsonl");
            }
            return failed ? 2 : 0;
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
