#include "crpsmix/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <CLI11.hpp>

#include "crpsmix/data.hpp"
#include "crpsmix/errors.hpp"
#include "crpsmix/experiment.hpp"
#include "crpsmix/verify.hpp"

namespace crpsmix {

namespace {

namespace fs = std::filesystem;

struct IoFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fnv1a_hex(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string mode_name(AggregationMode m) { return m == AggregationMode::AA ? "aa" : "wa"; }

AggregationMode parse_mode(const std::string& s) { return s == "wa" ? AggregationMode::WA : AggregationMode::AA; }

fs::path default_out_dir() {
    if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') return env;
    return "crpsmix-out";
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoFailure("cannot create output directory " + dir.string());
}

/// Writes through a temporary sibling and renames it into place.
void write_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoFailure("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw IoFailure("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoFailure("cannot rename " + tmp.string() + " to " + path.string());
}

template <class Fn>
void write_file(const fs::path& path, Fn&& fill) {
    std::ostringstream ss;
    fill(ss);
    write_atomic(path, ss.str());
}

/// Ordered key=value lines.
class KeyValues {
public:
    void add(const std::string& key, const std::string& value) { rows_.emplace_back(key, value); }
    void add(const std::string& key, double value) { add(key, fmt(value)); }
    void add(const std::string& key, std::size_t value) { add(key, std::to_string(value)); }
    void add(const std::string& key, bool value) { add(key, std::string(value ? "1" : "0")); }

    std::string as_manifest() const {
        std::string s;
        for (const auto& [k, v] : rows_) s += k + "=" + v + "\n";
        return s;
    }
    std::string as_csv() const {
        std::string s = "metric,value\n";
        for (const auto& [k, v] : rows_) s += k + "," + v + "\n";
        return s;
    }

private:
    std::vector<std::pair<std::string, std::string>> rows_;
};

void write_curves_csv(std::ostream& out, const GameLog& log) {
    out << "t,H";
    for (std::size_t i = 1; i <= log.experts(); ++i) out << ",L_" << i;
    out << ",regret\n";
    for (std::size_t t = 0; t < log.size(); ++t) {
        const auto& cum = log.expert_cumulative()[t];
        out << (t + 1) << ',' << fmt(log.learner_cumulative()[t]);
        for (double v : cum) out << ',' << fmt(v);
        out << ',' << fmt(log.learner_cumulative()[t] - *std::min_element(cum.begin(), cum.end())) << '\n';
    }
}

void add_regret_metrics(KeyValues& kv, const GameLog& log, const RegretReport& rep) {
    kv.add("steps", rep.steps);
    kv.add("experts", rep.experts);
    kv.add("eta", rep.eta);
    kv.add("learner_loss", log.learner_cumulative().back());
    kv.add("mean_learner_loss", log.learner_cumulative().back() / static_cast<double>(rep.steps));
    for (std::size_t i = 0; i < rep.experts; ++i) {
        kv.add("expert_loss_" + std::to_string(i + 1), log.expert_cumulative().back()[i]);
    }
    kv.add("final_regret", rep.final_regret);
    kv.add("max_prefix_regret", rep.max_prefix_regret);
    kv.add("eta_bound", rep.eta_bound);
    if (rep.theorem_bound) kv.add("theorem_bound", *rep.theorem_bound);
    kv.add("regret_bound_satisfied", rep.regret_bound_satisfied);
    double max_disc = -std::numeric_limits<double>::infinity();
    for (const auto& e : rep.per_expert) max_disc = std::max(max_disc, e.max_discounted);
    kv.add("max_discounted_regret", max_disc);
    kv.add("discounted_bound_satisfied", rep.discounted_bound_satisfied);
}

int report_exception(std::ostream& err, const std::exception& e, int code) {
    err << "error: " << e.what() << '\n';
    return code;
}

/// Maps library exceptions onto exit codes.
template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const IoFailure& e) {
        return report_exception(err, e, kExitIo);
    } catch (const DataError& e) {
        return report_exception(err, e, kExitIo);
    } catch (const ArgumentError& e) {
        return report_exception(err, e, kExitUsage);
    } catch (const DomainError& e) {
        return report_exception(err, e, kExitUsage);
    } catch (const std::exception& e) {
        return report_exception(err, e, kExitCheckFailed);
    }
}

// ---------------------------------------------------------------------------

struct SynthArgs {
    int method = 1;
    std::string mode = "aa";
    double alpha = 0.001;
    std::size_t steps = 3000;
    std::uint64_t seed = 1;
    std::size_t grid = 1024;
    std::size_t segment = 250;
    std::size_t snapshot_every = 500;
    std::string out;
};

SyntheticOptions synth_options(const SynthArgs& a) {
    SyntheticOptions o;
    o.method = a.method;
    o.mode = parse_mode(a.mode);
    o.alpha = a.alpha;
    o.steps = a.steps;
    o.seed = a.seed;
    o.grid = a.grid;
    o.snapshot_interval = a.snapshot_every;
    o.preset.segment_length = a.segment;
    return o;
}

int cmd_synth(const SynthArgs& a, std::ostream& out) {
    const fs::path dir = a.out.empty() ? default_out_dir() : fs::path(a.out);
    ensure_dir(dir);
    const SyntheticOptions opts = synth_options(a);
    const SyntheticRun run = run_synthetic(opts);

    double baseline = run.log.learner_cumulative().back();
    if (!(opts.mode == AggregationMode::WA && opts.alpha == 0.0)) {
        SyntheticOptions base = opts;
        base.mode = AggregationMode::WA;
        base.alpha = 0.0;
        base.snapshot_interval = 0;
        baseline = run_synthetic(base).log.learner_cumulative().back();
    }

    const std::string config = "synth method=" + std::to_string(a.method) + " mode=" + a.mode +
                               " alpha=" + fmt(a.alpha) + " steps=" + std::to_string(a.steps) +
                               " seed=" + std::to_string(a.seed) + " grid=" + std::to_string(a.grid) +
                               " segment=" + std::to_string(a.segment);
    KeyValues summary;
    add_regret_metrics(summary, run.log, run.report);
    summary.add("crps_bound", run.theorem_bound);
    summary.add("wa_alpha0_loss", baseline);
    summary.add("normalized_loss", run.log.learner_cumulative().back() / baseline);

    write_file(dir / "game.csv", [&](std::ostream& s) { write_game_csv(s, run.log); });
    write_file(dir / "curves.csv", [&](std::ostream& s) { write_curves_csv(s, run.log); });
    write_file(dir / "snapshots.csv", [&](std::ostream& s) { write_snapshots_csv(s, run.snapshots); });
    write_file(dir / "summary.csv", [&](std::ostream& s) { s << summary.as_csv(); });

    KeyValues manifest;
    manifest.add("experiment", std::string("synth"));
    manifest.add("config", config);
    manifest.add("config_hash", fnv1a_hex(config));
    manifest.add("seed", std::to_string(a.seed));
    manifest.add("inputs", std::string("none"));
    manifest.add("output_dir", dir.string());
    write_atomic(dir / "manifest.txt", manifest.as_manifest() + summary.as_manifest());

    const bool checked = opts.alpha == 0.0;
    const bool ok = !checked || run.report.regret_bound_satisfied;
    out << "synth: H_T=" << fmt(run.log.learner_cumulative().back()) << " regret=" << fmt(run.report.final_regret)
        << " bound=" << fmt(run.theorem_bound) << (checked ? (ok ? " [bound ok]" : " [BOUND VIOLATED]") : "")
        << " -> " << dir.string() << '\n';
    return ok ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------

struct LoadArgs {
    std::string train;
    std::string test;
    std::string data;
    std::string split;
    std::string schema = "default";
    std::string timestamp_col;
    std::string load_col;
    std::vector<std::string> temp_cols;
    std::string delimiter;
    std::string mode = "aa";
    std::string confidence = "smooth";
    double alpha = 0.001;
    std::size_t grid = 1024;
    int components = 2;
    std::uint64_t seed = 1;
    std::vector<int> band_hours{12};
    std::string out;
};

CsvSchema load_schema(const LoadArgs& a) {
    CsvSchema s = a.schema == "gefcom" ? CsvSchema::gefcom2014() : CsvSchema{};
    if (!a.timestamp_col.empty()) s.timestamp_column = a.timestamp_col;
    if (!a.load_col.empty()) s.load_column = a.load_col;
    if (!a.temp_cols.empty()) s.temperature_columns = a.temp_cols;
    if (!a.delimiter.empty()) {
        if (a.delimiter.size() != 1) throw ArgumentError("delimiter must be a single character");
        s.delimiter = a.delimiter.front();
    }
    return s;
}

int cmd_load(const LoadArgs& a, std::ostream& out, std::ostream& err) {
    const bool pair = !a.train.empty() || !a.test.empty();
    if (pair == !a.data.empty()) throw ArgumentError("give either --train and --test, or --data");
    if (pair && (a.train.empty() || a.test.empty())) throw ArgumentError("--train and --test go together");
    if (!a.split.empty() && a.data.empty()) throw ArgumentError("--split needs --data");

    const CsvSchema schema = load_schema(a);
    const fs::path dir = a.out.empty() ? default_out_dir() : fs::path(a.out);
    ensure_dir(dir);

    std::vector<LoadRecord> train;
    std::vector<LoadRecord> test;
    std::string inputs;
    if (pair) {
        LoadData tr = load_csv(a.train, schema);
        LoadData te = load_csv(a.test, schema);
        write_file(dir / "quality_train.txt", [&](std::ostream& s) { write_quality_report(s, tr.report); });
        write_file(dir / "quality_test.txt", [&](std::ostream& s) { write_quality_report(s, te.report); });
        train = std::move(tr.records);
        test = std::move(te.records);
        inputs = a.train + ";" + a.test;
    } else {
        LoadData all = load_csv(a.data, schema);
        write_file(dir / "quality.txt", [&](std::ostream& s) { write_quality_report(s, all.report); });
        const HourStamp boundary =
            a.split.empty() ? default_split_boundary(all.records) : parse_timestamp(a.split);
        auto parts = split_train_test(all.records, boundary);
        train = std::move(parts.first);
        test = std::move(parts.second);
        inputs = a.data;
    }

    LoadOptions opts;
    opts.mode = parse_mode(a.mode);
    opts.confidence = parse_confidence_mode(a.confidence);
    opts.alpha = a.alpha;
    opts.grid = a.grid;
    opts.roster.components = a.components;
    opts.roster.seed = a.seed;
    opts.band_hours = a.band_hours;
    const LoadRun run = run_load_study(train, test, opts);
    for (const auto& note : run.roster.notes()) err << "note: " << note << '\n';

    KeyValues summary;
    add_regret_metrics(summary, run.log, run.report);
    summary.add("a", run.domain.a());
    summary.add("b", run.domain.b());
    summary.add("train_records", train.size());
    summary.add("test_records_clipped", run.clipped);

    write_file(dir / "game.csv", [&](std::ostream& s) { write_game_csv(s, run.log); });
    write_file(dir / "curves.csv", [&](std::ostream& s) { write_curves_csv(s, run.log); });
    write_file(dir / "confidence.csv",
               [&](std::ostream& s) { write_confidence_csv(s, run.roster, run.hours, opts.confidence); });
    write_file(dir / "bands.csv", [&](std::ostream& s) { write_bands_csv(s, opts.band_levels, run.bands); });
    write_file(dir / "roster.txt", [&](std::ostream& s) {
        for (const auto& e : run.roster.experts()) {
            s << "# " << e.name << " points=" << e.training_points << '\n';
            write_gmm(s, e.model);
        }
        for (const auto& note : run.roster.notes()) s << "# note: " << note << '\n';
    });
    write_file(dir / "summary.csv", [&](std::ostream& s) { s << summary.as_csv(); });

    std::string config = "load mode=" + a.mode + " confidence=" + a.confidence + " alpha=" + fmt(a.alpha) +
                         " grid=" + std::to_string(a.grid) + " components=" + std::to_string(a.components) +
                         " seed=" + std::to_string(a.seed) + " split=" + a.split + " schema=" + a.schema;
    KeyValues manifest;
    manifest.add("experiment", std::string("load"));
    manifest.add("config", config);
    manifest.add("config_hash", fnv1a_hex(config + " inputs=" + inputs));
    manifest.add("seed", std::to_string(a.seed));
    manifest.add("inputs", inputs);
    manifest.add("output_dir", dir.string());
    write_atomic(dir / "manifest.txt", manifest.as_manifest() + summary.as_manifest());

    const bool checked = opts.alpha == 0.0;
    const bool ok = !checked || run.report.discounted_bound_satisfied;
    out << "load: steps=" << run.log.size()
        << " mean_loss=" << fmt(run.log.learner_cumulative().back() / static_cast<double>(run.log.size()))
        << " discounted_bound=" << fmt(run.report.eta_bound)
        << (checked ? (ok ? " [bound ok]" : " [BOUND VIOLATED]") : "") << " -> " << dir.string() << '\n';
    return ok ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
    std::uint64_t seed = VerifyOptions{}.seed;
    std::size_t cases = VerifyOptions{}.cases;
    std::string json;
    double substitution_rate = kCrpsSquareRate;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
    VerifyOptions opts;
    opts.seed = a.seed;
    opts.cases = a.cases;
    opts.substitution_rate = a.substitution_rate;
    const VerifyReport rep = run_verify(opts);
    const std::string json = to_json(rep, opts);
    if (a.json.empty()) {
        out << json << '\n';
    } else {
        write_atomic(a.json, json + "\n");
        for (const auto& s : rep.suites) {
            out << (s.passed ? "PASS " : "FAIL ") << s.name << " cases=" << s.cases << " checks=" << s.checks
                << '\n';
        }
    }
    return rep.passed() ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
    SynthArgs synth;
    std::vector<double> alphas{0.0, 0.0001, 0.001, 0.005, 0.01, 0.05, 0.1, 0.2};
    std::size_t jobs = 0;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
    const fs::path dir = a.synth.out.empty() ? default_out_dir() : fs::path(a.synth.out);
    ensure_dir(dir);
    std::vector<double> alphas = a.alphas;
    if (std::find(alphas.begin(), alphas.end(), 0.0) == alphas.end()) alphas.insert(alphas.begin(), 0.0);

    struct Job {
        AggregationMode mode;
        double alpha;
        double loss = 0.0;
    };
    std::vector<Job> jobs;
    for (AggregationMode m : {AggregationMode::AA, AggregationMode::WA}) {
        for (double alpha : alphas) jobs.push_back({m, alpha});
    }
    const std::size_t width =
        a.jobs > 0 ? a.jobs : std::max<std::size_t>(1, std::thread::hardware_concurrency());
    for (std::size_t start = 0; start < jobs.size(); start += width) {
        std::vector<std::future<double>> batch;
        for (std::size_t j = start; j < std::min(jobs.size(), start + width); ++j) {
            SyntheticOptions o = synth_options(a.synth);
            o.mode = jobs[j].mode;
            o.alpha = jobs[j].alpha;
            o.snapshot_interval = 0;
            batch.push_back(std::async(std::launch::async,
                                       [o] { return run_synthetic(o).log.learner_cumulative().back(); }));
        }
        for (std::size_t k = 0; k < batch.size(); ++k) jobs[start + k].loss = batch[k].get();
    }
    double baseline = 0.0;
    for (const auto& j : jobs) {
        if (j.mode == AggregationMode::WA && j.alpha == 0.0) baseline = j.loss;
    }
    write_file(dir / "sweep.csv", [&](std::ostream& s) {
        s << "mode,alpha,loss,normalized_loss\n";
        for (const auto& j : jobs) {
            s << mode_name(j.mode) << ',' << fmt(j.alpha) << ',' << fmt(j.loss) << ',' << fmt(j.loss / baseline)
              << '\n';
        }
    });
    for (const auto& j : jobs) {
        out << mode_name(j.mode) << " alpha=" << fmt(j.alpha) << " normalized=" << fmt(j.loss / baseline) << '\n';
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Online aggregation of probabilistic forecasts under CRPS", "crpsmix"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Three-expert synthetic study");
    auto add_synth_flags = [](CLI::App* sub, SynthArgs& sa) {
        sub->add_option("--method", sa.method, "Mixing method")->check(CLI::IsMember({1, 2}))->capture_default_str();
        sub->add_option("--alpha", sa.alpha, "Fixed-share rate")->check(CLI::Range(0.0, 1.0))->capture_default_str();
        sub->add_option("--steps", sa.steps, "Number of rounds")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--seed", sa.seed, "Random seed")->capture_default_str();
        sub->add_option("--grid", sa.grid, "Grid cells")->check(CLI::Range(1, 1 << 20))->capture_default_str();
        sub->add_option("--segment", sa.segment, "Steps per leader segment")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        sub->add_option("--out", sa.out, std::string("Output directory (default $") + kOutDirEnv + ")");
    };
    add_synth_flags(s, synth);
    s->add_option("--mode", synth.mode, "aa or wa")->check(CLI::IsMember({"aa", "wa"}))->capture_default_str();
    s->add_option("--snapshot-every", synth.snapshot_every, "Keep the learner CDF every N steps (0: none)")
        ->capture_default_str();

    LoadArgs load;
    auto* l = app.add_subcommand("load", "Replay hourly load data with the 21-expert roster");
    l->add_option("--train", load.train, "Training CSV");
    l->add_option("--test", load.test, "Test CSV");
    l->add_option("--data", load.data, "Single CSV split by --split");
    l->add_option("--split", load.split, "First test timestamp (default: last 8760 hours)");
    l->add_option("--schema", load.schema, "Column preset")->check(CLI::IsMember({"default", "gefcom"}));
    l->add_option("--timestamp-col", load.timestamp_col, "Timestamp column name");
    l->add_option("--load-col", load.load_col, "Load column name");
    l->add_option("--temp-cols", load.temp_cols, "Temperature columns, averaged")->delimiter(',');
    l->add_option("--delimiter", load.delimiter, "Field delimiter");
    l->add_option("--mode", load.mode, "aa or wa")->check(CLI::IsMember({"aa", "wa"}))->capture_default_str();
    l->add_option("--confidence", load.confidence, "smooth, binary or off")
        ->check(CLI::IsMember({"smooth", "binary", "off"}))
        ->capture_default_str();
    l->add_option("--alpha", load.alpha, "Fixed-share rate")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    l->add_option("--grid", load.grid, "Grid cells")->check(CLI::Range(1, 1 << 20))->capture_default_str();
    l->add_option("--components", load.components, "Mixture components per expert")
        ->check(CLI::Range(1, 3))
        ->capture_default_str();
    l->add_option("--seed", load.seed, "EM seed")->capture_default_str();
    l->add_option("--band-hours", load.band_hours, "Hours of day for quantile bands")
        ->delimiter(',')
        ->check(CLI::Range(0, 23));
    l->add_option("--out", load.out, std::string("Output directory (default $") + kOutDirEnv + ")");

    VerifyArgs verify;
    auto* v = app.add_subcommand("verify", "Run the property suites");
    v->add_option("--seed", verify.seed, "Random seed")->capture_default_str();
    v->add_option("--cases", verify.cases, "Randomized cases per suite")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    v->add_option("--json", verify.json, "Write the report here instead of stdout");
    v->add_option("--substitution-rate", verify.substitution_rate)->group("");

    SweepArgs sweep;
    auto* w = app.add_subcommand("sweep", "Fixed-share rate sweep for AA and WA on one stream");
    add_synth_flags(w, sweep.synth);
    w->add_option("--alphas", sweep.alphas, "Rates to try")->delimiter(',')->check(CLI::Range(0.0, 1.0));
    w->add_option("--jobs", sweep.jobs, "Parallel runs (0: all cores)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    if (s->parsed()) return guarded(err, [&] { return cmd_synth(synth, out); });
    if (l->parsed()) return guarded(err, [&] { return cmd_load(load, out, err); });
    if (v->parsed()) return guarded(err, [&] { return cmd_verify(verify, out); });
    return guarded(err, [&] { return cmd_sweep(sweep, out); });
}

}  // namespace crpsmix
