#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hhtfc/csv.hpp"
#include "hhtfc/error.hpp"
#include "hhtfc/pipeline.hpp"

namespace fs = std::filesystem;
using namespace hhtfc;

namespace {

constexpr const char* kWorkspaceEnv = "HHTFC_WORKSPACE";

struct Options {
    std::string config;
    std::string workspace;
    std::optional<std::uint64_t> seed;
    std::string format = "table";
    std::optional<std::size_t> origin;
    std::size_t count = 1;
};

struct Context {
    pipeline::PipelineConfig config;
    pipeline::ArtifactStore store;
    pipeline::Dataset data;
};

Context open(const Options& opt) {
    auto config = pipeline::load_config(opt.config);
    if (opt.seed) config.seed = *opt.seed;
    fs::path root = ".";
    if (!opt.workspace.empty()) {
        root = opt.workspace;
    } else if (const char* env = std::getenv(kWorkspaceEnv); env && *env) {
        root = env;
    }
    auto data = pipeline::load_dataset(config);
    return {std::move(config), pipeline::ArtifactStore(root), std::move(data)};
}

void print_written(const std::vector<fs::path>& paths, const fs::path& root) {
    if (paths.size() > 6) {
        std::cerr << "wrote " << paths.size() << " artifacts under " << root.string() << '\n';
        return;
    }
    for (const auto& p : paths) std::cerr << "wrote " << p.string() << '\n';
}

std::string fmt(double v, int prec = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(prec) << v;
    return os.str();
}

int cmd_decompose(const Options& opt) {
    auto ctx = open(opt);
    const auto dec = pipeline::run_decompose(ctx.config, ctx.data, &ctx.store);
    const auto written = ctx.store.commit();
    if (opt.format == "json") {
        nlohmann::json doc = {{"series", nlohmann::json::array()}};
        for (std::size_t i = 0; i < dec.series.size(); ++i) {
            const auto& s = dec.series[i];
            doc["series"].push_back({{"name", s.name},
                                     {"role", s.role == pipeline::SeriesRole::target ? "target" : "exogenous"},
                                     {"imfs", s.emd.imfs.size()},
                                     {"components", s.components.size()},
                                     {"length", ctx.data.train[i].size()}});
        }
        std::cout << doc.dump(1) << '\n';
    } else {
        const bool as_csv = opt.format == "csv";
        std::cout << (as_csv ? "series,role,imfs,components,length\n"
                             : "series           role       IMFs  components  length\n");
        for (std::size_t i = 0; i < dec.series.size(); ++i) {
            const auto& s = dec.series[i];
            const char* role = s.role == pipeline::SeriesRole::target ? "target" : "exogenous";
            if (as_csv) {
                std::cout << s.name << ',' << role << ',' << s.emd.imfs.size() << ',' << s.components.size() << ','
                          << ctx.data.train[i].size() << '\n';
            } else {
                std::cout << std::left << std::setw(17) << s.name << std::setw(11) << role << std::right
                          << std::setw(4) << s.emd.imfs.size() << std::setw(12) << s.components.size()
                          << std::setw(8) << ctx.data.train[i].size() << '\n';
            }
        }
    }
    print_written(written, ctx.store.root());
    return 0;
}

int cmd_rank(const Options& opt) {
    auto ctx = open(opt);
    const auto dec = pipeline::run_decompose(ctx.config, ctx.data, &ctx.store);
    const auto matrix = pipeline::design_matrix(ctx.config, ctx.data, dec);
    const auto rep = pipeline::run_rank(ctx.config, matrix, &ctx.store);
    const auto written = ctx.store.commit();
    const double thr = ctx.config.importance.threshold;
    if (opt.format == "json") {
        nlohmann::json doc = {{"threshold", thr}, {"features", nlohmann::json::array()}};
        for (std::size_t j = 0; j < rep.features.size(); ++j)
            doc["features"].push_back({{"feature", rep.features[j]},
                                       {"rf", rep.rf.normalized[j]},
                                       {"bt", rep.bt.normalized[j]},
                                       {"combined", rep.combined[j]},
                                       {"kept", rep.combined[j] >= thr}});
        std::cout << doc.dump(1) << '\n';
    } else if (opt.format == "csv") {
        forest::write_csv(std::cout, rep);
    } else {
        std::cout << std::left << std::setw(24) << "feature" << std::right << std::setw(9) << "RF" << std::setw(9)
                  << "BT" << std::setw(10) << "combined" << "  kept\n";
        for (std::size_t j = 0; j < rep.features.size(); ++j)
            std::cout << std::left << std::setw(24) << rep.features[j] << std::right << std::setw(9)
                      << fmt(rep.rf.normalized[j], 3) << std::setw(9) << fmt(rep.bt.normalized[j], 3) << std::setw(10)
                      << fmt(rep.combined[j], 3) << "  " << (rep.combined[j] >= thr ? "yes" : "no") << '\n';
    }
    print_written(written, ctx.store.root());
    return 0;
}

int cmd_train(const Options& opt) {
    auto ctx = open(opt);
    const auto bundle = pipeline::run_train(ctx.config, ctx.data, &ctx.store);
    const auto written = ctx.store.commit();
    if (bundle.prune_fallback)
        std::cerr << "warning: every feature fell below the importance threshold; kept only the strongest one\n";
    nlohmann::json doc = {{"fingerprint", bundle.fingerprint}, {"features", nlohmann::json::array()},
                          {"models", nlohmann::json::array()}};
    for (const auto& f : bundle.features) doc["features"].push_back(f.spec.label());
    for (const auto& m : bundle.models) {
        nlohmann::json hs = nlohmann::json::array();
        for (const auto& h : m.horizons) {
            nlohmann::json params = nlohmann::json::object();
            for (const auto& [k, v] : h.params) params[k] = v;
            hs.push_back({{"horizon", h.horizon}, {"params", params}});
        }
        doc["models"].push_back({{"name", m.name}, {"type", pipeline::to_string(m.kind)}, {"horizons", hs}});
    }
    if (opt.format == "json") {
        std::cout << doc.dump(1) << '\n';
    } else if (opt.format == "csv") {
        std::cout << "model,horizon,params\n";
        for (const auto& m : doc["models"])
            for (const auto& h : m["horizons"])
            {
                std::string params = h["params"].dump();
                for (std::size_t at = 0; (at = params.find('"', at)) != std::string::npos; at += 2) params.insert(at, 1, '"');
                std::cout << m["name"].get<std::string>() << ',' << h["horizon"] << ",\"" << params << "\"\n";
            }
    } else {
        std::cout << "bundle " << bundle.fingerprint << ", " << bundle.features.size() << " retained features:";
        for (const auto& f : bundle.features) std::cout << ' ' << f.spec.label();
        std::cout << '\n';
        for (const auto& m : doc["models"]) {
            std::cout << std::left << std::setw(16) << m["name"].get<std::string>() << std::setw(14)
                      << m["type"].get<std::string>() << m["horizons"].size() << " horizon model(s)";
            if (!m["horizons"].empty()) std::cout << ", h" << m["horizons"][0]["horizon"] << ' ' << m["horizons"][0]["params"].dump();
            std::cout << '\n';
        }
    }
    print_written(written, ctx.store.root());
    return 0;
}

int cmd_forecast(const Options& opt) {
    auto ctx = open(opt);
    const auto bundle = pipeline::load_bundle(ctx.store, ctx.config);
    const std::size_t n = ctx.data.target_train().size();
    const std::size_t begin = opt.origin.value_or(n - 1);
    const auto fc = pipeline::run_forecast(ctx.config, bundle, ctx.data, begin, begin + opt.count, &ctx.store);
    const auto written = ctx.store.commit();
    const auto& full = ctx.data.full[ctx.data.target].values;
    if (opt.format == "json") {
        nlohmann::json doc = nlohmann::json::array();
        for (const auto& f : fc)
            doc.push_back({{"model", f.model}, {"horizon", f.horizon}, {"origins", f.origins}, {"forecast", f.values}});
        std::cout << doc.dump(1) << '\n';
    } else {
        const bool as_csv = opt.format == "csv";
        std::cout << (as_csv ? "model,origin_index,horizon,target_index,forecast,actual\n"
                             : "model            origin  horizon  target    forecast      actual\n");
        for (const auto& f : fc)
            for (std::size_t r = 0; r < f.origins.size(); ++r) {
                const std::size_t t = f.origins[r] + f.horizon;
                if (as_csv) {
                    std::cout << f.model << ',' << f.origins[r] << ',' << f.horizon << ',' << t << ','
                              << csv::format_double(f.values[r]) << ','
                              << (t < full.size() ? csv::format_double(full[t]) : "") << '\n';
                } else {
                    std::cout << std::left << std::setw(16) << f.model << std::right << std::setw(7) << f.origins[r]
                              << std::setw(9) << f.horizon << std::setw(8) << t << std::setw(12)
                              << fmt(f.values[r]) << std::setw(12) << (t < full.size() ? fmt(full[t]) : "-") << '\n';
                }
            }
    }
    print_written(written, ctx.store.root());
    return 0;
}

int cmd_evaluate(const Options& opt) {
    auto ctx = open(opt);
    const auto bundle = pipeline::load_bundle(ctx.store, ctx.config);
    const auto ev = pipeline::run_evaluate(ctx.config, bundle, ctx.data, &ctx.store);
    const auto written = ctx.store.commit();
    if (opt.format == "json") {
        std::cout << pipeline::to_json(ev, bundle.fingerprint).dump(1) << '\n';
    } else if (opt.format == "csv") {
        std::cout << ctx.store.read("forecasts/holdout.csv");
    } else {
        metrics::write_interval_table(std::cout, ev.reports);
    }
    print_written(written, ctx.store.root());
    return 0;
}

int cmd_compare(const Options& opt) {
    auto ctx = open(opt);
    const auto bundle = pipeline::load_bundle(ctx.store, ctx.config);
    if (!ctx.store.exists("metrics.json"))
        throw DataError("no metrics.json in workspace " + ctx.store.root().string() + "; run 'evaluate' first");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(ctx.store.read("metrics.json"));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("metrics.json is not valid JSON: ") + e.what());
    }
    if (doc.value("fingerprint", "") != bundle.fingerprint)
        throw DataError("metrics.json belongs to a different bundle; rerun 'evaluate'");
    const auto reports = pipeline::reports_from_json(doc);
    if (opt.format == "json") {
        std::cout << doc.dump(1) << '\n';
    } else if (opt.format == "csv") {
        std::cout << "model,mape_percent,mae,rmse\n";
        for (const auto& r : reports)
            std::cout << r.model << ',' << (r.report.mape ? csv::format_double(*r.report.mape) : "") << ','
                      << csv::format_double(r.report.mae) << ',' << csv::format_double(r.report.rmse) << '\n';
    } else {
        metrics::write_model_table(std::cout, reports);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid HHT forecasting pipeline: decompose, rank, train, forecast, evaluate, compare"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "Pipeline config (JSON)")->required();
        sub->add_option("--workspace", opt.workspace,
                        std::string("Workspace root for artifacts (default: $") + kWorkspaceEnv + " or .)");
        sub->add_option("--seed", opt.seed, "Override the config's master seed");
        sub->add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"table", "json", "csv"}));
    };
    struct Entry {
        const char* name;
        const char* help;
        int (*run)(const Options&);
    };
    const Entry entries[] = {
        {"decompose", "Decompose every input series into IMFs and Hilbert attributes", cmd_decompose},
        {"rank", "Rank HHT features with random forest and boosted trees", cmd_rank},
        {"train", "Prune features, cross-validate and train per-horizon models", cmd_train},
        {"forecast", "Forecast every horizon from training-range origins", cmd_forecast},
        {"evaluate", "Score holdout forecasts per model and sub-interval", cmd_evaluate},
        {"compare", "Render the multi-model error table from metrics.json", cmd_compare},
    };
    std::vector<std::pair<CLI::App*, const Entry*>> subs;
    for (const auto& e : entries) {
        auto* sub = app.add_subcommand(e.name, e.help);
        add_common(sub);
        if (std::string(e.name) == "forecast") {
            sub->add_option("--origin", opt.origin, "First origin time index (default: last training sample)");
            sub->add_option("--count", opt.count, "Number of consecutive origins")->check(CLI::PositiveNumber);
        }
        subs.emplace_back(sub, &e);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        for (const auto& [sub, entry] : subs)
            if (sub->parsed()) return entry->run(opt);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const ComputeError& e) {
        std::cerr << "compute error: " << e.what() << '\n';
        return 3;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "compute error: " << e.what() << '\n';
        return 3;
    }
    return 1;
}
