#include "lessketch/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lessketch/data.hpp"
#include "lessketch/distributed.hpp"
#include "lessketch/errors.hpp"
#include "lessketch/experiment.hpp"
#include "lessketch/leverage.hpp"
#include "lessketch/linalg.hpp"
#include "lessketch/solver.hpp"
#include "lessketch/verify.hpp"

namespace lessketch {

namespace {

struct DataOptions {
    std::string dataset;
    std::string synthetic;
    std::size_t truncate = 0;
    std::uint64_t seed = 0;
};

struct LoadedProblem {
    Dataset data;
    nlohmann::json meta;
};

void add_data_flags(CLI::App* cmd, DataOptions& opts) {
    auto* ds = cmd->add_option("--dataset", opts.dataset, "libsvm file (columns are scaled to unit norm)");
    auto* syn = cmd->add_option("--synthetic", opts.synthetic, "synthetic problem, e.g. n=2000,d=20,noise=1,cond=10");
    ds->excludes(syn);
    cmd->add_option("--truncate", opts.truncate, "keep only the first N rows");
}

LoadedProblem load_problem(const DataOptions& opts) {
    LoadedProblem out{{DenseMatrix(1, 1), DenseVector(1)}, nlohmann::json::object()};
    if (!opts.dataset.empty()) {
        out.data = truncate_rows(parse_libsvm_file(opts.dataset), opts.truncate);
        const Standardization st = standardize_columns(out.data.a);
        out.meta["source"] = opts.dataset;
        out.meta["standardization"] = "columns scaled to unit Euclidean norm";
        out.meta["column_norms"] = st.column_norms;
        out.meta["zero_columns"] = st.zero_columns;
    } else {
        SynthSpec spec;
        spec.seed = opts.seed;
        spec = parse_synth_spec(opts.synthetic, spec);
        SynthProblem p = synth_problem(spec);
        out.data = truncate_rows({std::move(p.a), std::move(p.b)}, opts.truncate);
        out.meta["source"] = "synthetic";
        out.meta["spec"] = {{"n", spec.n},     {"d", spec.d},         {"noise", spec.noise},  {"cond", spec.cond},
                            {"seed", spec.seed}, {"tail", spec.tail_df}, {"hetero", spec.hetero}};
    }
    out.meta["rows"] = out.data.a.rows();
    out.meta["cols"] = out.data.a.cols();
    return out;
}

void write_meta(const std::string& out_path, const nlohmann::json& meta) {
    std::ofstream f(out_path + ".meta");
    f << meta.dump(2) << '\n';
}

std::ostream& open_output(const std::string& path, std::ofstream& file, std::ostream& fallback) {
    if (path.empty()) return fallback;
    file.open(path);
    if (!file) throw DataError("cannot write '" + path + "'");
    return file;
}

// ------------------------------------------------------------------ verify

struct VerifyOptions {
    std::string claim = "all";
    std::size_t d = 8;
    std::size_t trials = 0;
    bool negative = false;
};

DenseMatrix haar_basis(std::size_t n, std::size_t d, std::uint64_t seed) {
    SynthSpec spec;
    spec.n = n;
    spec.d = d;
    spec.seed = seed;
    spec.noise = 0.0;
    return thin_qr(synth_problem(spec).a).q;
}

std::vector<McReport> run_claim(const std::string& claim, const VerifyOptions& v, std::uint64_t seed) {
    const std::size_t d = v.d;
    auto trials_or = [&](std::size_t fallback) { return v.trials ? v.trials : fallback; };
    std::vector<McReport> out;
    auto add = [&](McReport r) { out.push_back(std::move(r)); };

    if (claim == "isotropy") {
        const std::size_t n = 25 * d;
        const DenseMatrix u = haar_basis(n, d, seed);
        const LeverageScores ls = exact_leverage_scores(u);
        LessConfig cfg;
        cfg.s = 8;
        cfg.seed = seed;
        cfg.scale_by_probability = !v.negative;
        IsotropyOptions opts;
        opts.basis = &u;
        add(check_isotropy(n, d, ls.scores, cfg, trials_or(100000), opts));
    } else if (claim == "subspace") {
        const DenseMatrix u = haar_basis(50 * d, d, seed);
        LessConfig cfg;
        cfg.m = v.negative ? d : 8 * d;
        cfg.s = 8;
        cfg.seed = seed;
        add(check_subspace_embedding(u, cfg, 0.5, trials_or(200)));
    } else if (claim == "moment") {
        const std::size_t n = 500;
        DenseMatrix u = haar_basis(n, d, seed);
        if (v.negative) {
            u = DenseMatrix(n, d);
            for (std::size_t j = 0; j < d; ++j) u(j, j) = 1.0;
        }
        const std::vector<double> s_values{1, 4, 16};
        MomentOptions opts;
        opts.seed = seed;
        opts.uniform = v.negative;
        for (auto& r : check_moment_scaling(u, DenseMatrix::identity(d), s_values, 2, trials_or(20000), opts))
            add(std::move(r));
    } else if (claim == "sparsifier") {
        SparsifierOptions opts;
        opts.seed = seed;
        DenseMatrix u = haar_basis(500, d, seed);
        if (v.negative) {
            u = DenseMatrix(200, d);
            for (std::size_t j = 0; j < d; ++j) u(j, j) = 1.0;
            opts.uniform = true;
        }
        add(check_sparsifier_norm(u, std::max(1.0, d / 2.0), 0.1, trials_or(2000), opts));
    } else if (claim == "trace") {
        const DenseMatrix u = haar_basis(50 * d, d, seed);
        LessConfig cfg;
        cfg.m = 2 * d;
        cfg.s = 8;
        cfg.seed = seed;
        TraceOptions opts;
        if (v.negative) opts.size_factor = 1.0;
        add(check_trace_concentration(u, cfg, trials_or(2000), opts));
    } else if (claim == "inversion") {
        const DenseMatrix u = haar_basis(50 * d, d, seed);
        InversionOptions opts;
        opts.seed = seed;
        if (v.negative) opts.gamma_override = 1.0;
        add(check_inversion_bias(u, 10 * d, 8, trials_or(5000), opts));
    } else if (claim == "lsbias") {
        SynthSpec spec;
        spec.n = 2000;
        spec.d = d;
        spec.seed = seed;
        spec.tail_df = 1.5;
        spec.hetero = 1.0;
        const SynthProblem p = synth_problem(spec);
        const std::vector<std::size_t> ms{4 * d, 8 * d};
        const std::vector<double> ss{1, 16};
        LsBiasOptions opts;
        opts.seed = seed;
        opts.scale_by_probability = !v.negative;
        for (auto& r : check_ls_bias(p.a, p.b, ms, ss, trials_or(2000), opts)) add(std::move(r));
    } else {
        throw CLI::ValidationError("--claim", "unknown claim '" + claim + "'");
    }
    return out;
}

int exit_code_for(const MachineFailed& e) {
    switch (e.cause()) {
        case MachineFailed::Cause::Data: return 2;
        case MachineFailed::Cause::Numerical: return 3;
        default: return 3;
    }
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Leverage-score sparsified sketching for least squares"};
    app.name("less_cli");
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    std::string out_path;
    std::string mode_text = "less";
    app.add_option("--seed", seed, "root random seed")->capture_default_str();

    // solve
    auto* solve = app.add_subcommand("solve", "two-pass distributed solve with q machines");
    DataOptions solve_data;
    std::size_t solve_m = 0, solve_q = 1, solve_k = kDefaultProbeWidth;
    double solve_s = 8;
    add_data_flags(solve, solve_data);
    solve->add_option("--m", solve_m, "sketch rows per machine (default 6d)");
    solve->add_option("--s", solve_s, "sparsity parameter")->capture_default_str();
    solve->add_option("--q", solve_q, "number of machines")->capture_default_str();
    solve->add_option("--k", solve_k, "probe width")->capture_default_str();
    solve->add_option("--mode", mode_text, "less | lessuniform | subsample")->capture_default_str();
    solve->add_option("--out", out_path, "write the estimate as CSV");
    solve->add_option("--seed", seed, "root random seed");

    // sketch
    auto* sketch = app.add_subcommand("sketch", "one-pass sketch (SA, Sb) written in libsvm format");
    DataOptions sketch_data;
    std::size_t sketch_m = 0;
    double sketch_s = 8;
    add_data_flags(sketch, sketch_data);
    sketch->add_option("--m", sketch_m, "sketch rows (default 6d)");
    sketch->add_option("--s", sketch_s, "sparsity parameter")->capture_default_str();
    sketch->add_option("--mode", mode_text, "less | lessuniform | subsample")->capture_default_str();
    sketch->add_option("--out", out_path, "output path (default stdout)");
    sketch->add_option("--seed", seed, "root random seed");

    // verify
    auto* verify = app.add_subcommand("verify", "Monte Carlo checks, McReport CSV on stdout");
    VerifyOptions vopts;
    verify->add_option("--claim", vopts.claim, "isotropy | subspace | moment | sparsifier | trace | inversion | lsbias | all")
        ->capture_default_str();
    verify->add_option("--d", vopts.d, "dimension")->capture_default_str();
    verify->add_option("--trials", vopts.trials, "Monte Carlo trials (default per claim)");
    verify->add_flag("--negative", vopts.negative, "run the negative-control configuration instead");
    verify->add_option("--out", out_path, "write CSV here instead of stdout");
    verify->add_option("--seed", seed, "root random seed");

    // experiment
    auto* experiment = app.add_subcommand("experiment", "distributed averaging at a fixed sketching budget");
    DataOptions exp_data;
    std::size_t budget = 512, config_count = 4, qmax = 256, repeats = 100;
    add_data_flags(experiment, exp_data);
    experiment->add_option("--budget", budget, "m * nnz per configuration")->capture_default_str();
    experiment->add_option("--configs", config_count, "number of (m, nnz) configurations")->capture_default_str();
    experiment->add_option("--qmax", qmax, "largest q; the grid is 1, 4, 16, ... up to qmax")->capture_default_str();
    experiment->add_option("--repeats", repeats, "repeats per point")->capture_default_str();
    experiment->add_option("--mode", mode_text, "less | lessuniform | subsample");
    experiment->add_option("--out", out_path, "CSV output path (default stdout)");
    experiment->add_option("--seed", seed, "root random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 1;
    }

    try {
        if (*solve || *sketch || *experiment) {
            DataOptions& data_opts = *solve ? solve_data : (*sketch ? sketch_data : exp_data);
            if (data_opts.dataset.empty() && data_opts.synthetic.empty()) {
                err << "one of --dataset or --synthetic is required\n" << app.help();
                return 1;
            }
            data_opts.seed = seed;
        }

        if (*solve) {
            const LoadedProblem prob = load_problem(solve_data);
            const std::size_t d = prob.data.a.cols();
            LessConfig cfg;
            cfg.m = solve_m ? solve_m : 6 * d;
            cfg.s = solve_s;
            cfg.mode = parse_sketch_mode(mode_text);
            cfg.density = std::min(1.0, solve_s / static_cast<double>(prob.data.a.rows()));
            TwoPassOptions opts;
            opts.probe_width = solve_k;
            const DistributedResult res = run_two_pass(prob.data.a, prob.data.b, solve_q, cfg, seed, opts);
            const LossOracle oracle(prob.data.a, prob.data.b);
            nlohmann::json report = prob.meta;
            report["q"] = solve_q;
            report["m"] = cfg.m;
            report["mode"] = to_string(cfg.mode);
            report["relative_excess_loss"] = oracle.relative_excess_loss(res.x_hat.span());
            report["x_hat"] = res.x_hat.values();
            nlohmann::json ledgers = nlohmann::json::array();
            for (const auto& l : res.per_machine)
                ledgers.push_back({{"machine_id", l.machine_id},
                                   {"passes", l.passes},
                                   {"rows_read", l.rows_read},
                                   {"peak_words", l.peak_words},
                                   {"words_communicated", l.words_communicated},
                                   {"estimate_words", l.estimate_words},
                                   {"words_received", l.words_received}});
            report["ledgers"] = ledgers;
            out << report.dump(2) << '\n';
            if (!out_path.empty()) {
                std::ofstream f(out_path);
                if (!f) throw DataError("cannot write '" + out_path + "'");
                f.precision(17);
                f << "index,value\n";
                for (std::size_t j = 0; j < d; ++j) f << j << ',' << res.x_hat[j] << '\n';
                write_meta(out_path, prob.meta);
            }
            return 0;
        }

        if (*sketch) {
            const LoadedProblem prob = load_problem(sketch_data);
            const std::size_t n = prob.data.a.rows();
            const std::size_t d = prob.data.a.cols();
            LessConfig cfg;
            cfg.m = sketch_m ? sketch_m : 6 * d;
            cfg.s = sketch_s;
            cfg.mode = parse_sketch_mode(mode_text);
            cfg.density = std::min(1.0, sketch_s / static_cast<double>(n));
            cfg.seed = derive_seed(seed, 1);
            std::optional<Preconditioner> pre;
            MatrixRowSource rows(prob.data.a, &prob.data.b);
            if (cfg.mode != SketchMode::LessUniform)
                pre = build_preconditioner(rows, preconditioner_sketch_config(n, d, cfg.m, cfg.s, derive_seed(seed, 2)),
                                           kDefaultProbeWidth, derive_seed(seed, 3));
            SketchAccumulator acc(cfg, d);
            rows.open();
            RowView row;
            while (rows.next(row)) {
                const double p = pre ? inclusion_probability(approx_leverage_score(row.values, *pre), cfg, d)
                                     : cfg.density;
                acc.ingest_row_with_probability(row.values, row.label, p);
            }
            std::ofstream file;
            write_libsvm(open_output(out_path, file, out), acc.sa(), acc.sb());
            if (!out_path.empty()) write_meta(out_path, prob.meta);
            return 0;
        }

        if (*verify) {
            std::vector<McReport> reports;
            const std::vector<std::string> all{"isotropy", "subspace", "moment", "sparsifier",
                                               "trace",    "inversion", "lsbias"};
            if (vopts.claim == "all") {
                for (const auto& c : all)
                    for (auto& r : run_claim(c, vopts, seed)) reports.push_back(std::move(r));
            } else {
                reports = run_claim(vopts.claim, vopts, seed);
            }
            std::ofstream file;
            write_reports_csv(open_output(out_path, file, out), reports);
            return 0;
        }

        if (*experiment) {
            const LoadedProblem prob = load_problem(exp_data);
            ExperimentConfig cfg;
            cfg.q_grid.clear();
            for (std::size_t q = 1; q <= qmax; q *= 4) cfg.q_grid.push_back(q);
            if (cfg.q_grid.back() != qmax) cfg.q_grid.push_back(qmax);
            cfg.configs = budget_configs(budget, config_count);
            cfg.repeats = repeats;
            cfg.seed = seed;
            cfg.mode = experiment->count("--mode") ? parse_sketch_mode(mode_text) : SketchMode::LessUniform;
            const auto rows = experiment_averaging(prob.data.a, prob.data.b, cfg);
            std::ofstream file;
            write_experiment_csv(open_output(out_path, file, out), rows);
            if (!out_path.empty()) write_meta(out_path, prob.meta);
            return 0;
        }
    } catch (const CLI::ValidationError& e) {
        err << e.what() << '\n';
        return 1;
    } catch (const MachineFailed& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const std::invalid_argument& e) {
        err << "usage error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace lessketch
