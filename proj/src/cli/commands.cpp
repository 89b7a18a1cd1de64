#include <algorithm>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "gpv/analysis.hpp"
#include "gpv/baselines.hpp"
#include "gpv/digest.hpp"
#include "gpv/error.hpp"
#include "gpv/ingest.hpp"
#include "gpv/perception.hpp"
#include "gpv/probe.hpp"
#include "gpv/report.hpp"
#include "gpv/scoring.hpp"
#include "gpv/serialize.hpp"
#include "gpv_cli.hpp"

namespace gpv::cli {

namespace {

namespace fs = std::filesystem;

constexpr const char* kSubjects = "corpus/subjects.jsonl";
constexpr const char* kChunks = "chunks/chunks.jsonl";
constexpr const char* kPerceptions = "perceptions/perceptions.jsonl";
constexpr const char* kSkipped = "perceptions/skipped.jsonl";
constexpr const char* kScores = "scores/scores.jsonl";
constexpr const char* kQuestions = "elicitation/questions.jsonl";

/// Options that only some commands read.
struct CommandOptions {
    std::string input;
    std::optional<std::size_t> min_words;
    bool no_filter = false;
    std::string safety;
    std::string lexicon;
    std::string inventory;
    std::string subject_id;
    std::string counts;
    std::string tool = "gpv";
    std::string with;
    std::string attr;
    bool center = false;
    std::optional<int> repeats;
    std::optional<int> epochs;
};

struct Context {
    RunConfig cfg;
    CommandOptions opt;
    RunStore store;
    std::ostream& out;

    Context(RunConfig c, CommandOptions o, std::ostream& os)
        : cfg(std::move(c)), opt(std::move(o)), store(cfg.run_dir()), out(os) {}

    ValueSystem system() const { return resolve_system(cfg.system); }

    std::shared_ptr<backend::Backend> backend(const ValueSystem& sys) const {
        const auto names = sys.value_names();
        return make_backend(cfg, names);
    }

    // Identifies the response source so a stage reruns when it changes.
    std::string backend_descriptor(const std::string& model) const {
        std::string d = std::string(to_string(cfg.backend)) + "|" + model;
        if (cfg.backend == BackendKind::replay) {
            for (const auto& f : cfg.fixtures) d += "|" + file_sha256(f);
        }
        if (cfg.backend == BackendKind::http) d += "|" + cfg.api_base + "|" + (cfg.request_logprobs ? "lp" : "text");
        return d;
    }
};

std::string stage_digest(std::initializer_list<std::string_view> parts) {
    std::string material;
    for (auto p : parts) {
        material += p;
        material += '\x1f';
    }
    return sha256_hex(material);
}

bool skip_if_current(Context& ctx, const std::string& stage, const std::string& digest) {
    if (!ctx.store.stage_current(stage, digest)) return false;
    ctx.out << stage << ": up to date\n";
    return true;
}

std::string vectors_file(std::string_view tool) { return "vectors/" + std::string(tool) + ".jsonl"; }

std::string producer_of(Tool tool) {
    switch (tool) {
        case Tool::gpv: return "aggregate";
        case Tool::self_report: return "baseline self-report";
        case Tool::valuebench: return "baseline valuebench";
        case Tool::dictionary: return "baseline dictionary";
    }
    return "aggregate";
}

std::vector<ValueVector> read_vectors(const Context& ctx, Tool tool) {
    const auto rows = ctx.store.read_rows(vectors_file(to_string(tool)), producer_of(tool));
    return serialize::from_rows<ValueVector>(rows, serialize::value_vector_from_json);
}

std::vector<SubjectRecord> read_subjects(const Context& ctx) {
    return serialize::from_rows<SubjectRecord>(ctx.store.read_rows(kSubjects, "ingest"), serialize::subject_from_json);
}

std::vector<std::string> subject_ids(std::span<const SubjectRecord> subjects) {
    std::vector<std::string> ids;
    for (const auto& s : subjects) ids.push_back(s.subject_id);
    return ids;
}

// Replaces the rows whose `key` field equals `id`, keeping the others in order.
std::vector<json> upsert(std::vector<json> rows, const std::string& key, const std::string& id, std::vector<json> fresh) {
    std::erase_if(rows, [&](const json& r) { return r.value(key, std::string{}) == id; });
    std::move(fresh.begin(), fresh.end(), std::back_inserter(rows));
    std::stable_sort(rows.begin(), rows.end(), [&](const json& a, const json& b) {
        return a.value(key, std::string{}) < b.value(key, std::string{});
    });
    return rows;
}

std::vector<json> rows_or_empty(const Context& ctx, const std::string& rel) {
    return ctx.store.exists(rel) ? records::read_jsonl(ctx.store.path(rel)) : std::vector<json>{};
}

std::string safe_name(std::string_view s) {
    std::string out;
    for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
    return out.empty() ? "_" : out;
}

// ---------------------------------------------------------------------------
// Pipeline stages

void cmd_ingest(Context& ctx) {
    if (ctx.opt.input.empty()) throw ValidationError("ingest needs --input");
    ingest::FilterRule rule;
    if (ctx.opt.min_words) rule.min_word_count = *ctx.opt.min_words;
    const auto digest = stage_digest({file_sha256(ctx.opt.input), ctx.opt.no_filter ? "nofilter" : "filter",
                                      std::to_string(rule.min_word_count)});
    if (skip_if_current(ctx, "ingest", digest)) return;
    const auto all = ingest::load_corpus(ctx.opt.input);
    const auto kept = ctx.opt.no_filter ? all : ingest::filter_corpus(all, rule);
    ctx.store.write_rows(kSubjects, serialize::to_rows<SubjectRecord>(kept));
    ctx.store.mark_stage("ingest", digest, {kSubjects});
    ctx.out << "ingest: kept " << kept.size() << " of " << all.size() << " subjects\n";
}

void cmd_chunk(Context& ctx) {
    const auto digest = stage_digest({ctx.store.digest(kSubjects, "ingest"), std::to_string(ctx.cfg.chunk_size)});
    if (skip_if_current(ctx, "chunk", digest)) return;
    const auto subjects = read_subjects(ctx);
    const auto chunks = ingest::chunk_corpus(subjects, ctx.cfg.chunk_size);
    ctx.store.write_rows(kChunks, serialize::to_rows<ingest::Chunk>(chunks));
    ctx.store.mark_stage("chunk", digest, {kChunks});
    ctx.out << "chunk: " << chunks.size() << " chunks from " << subjects.size() << " subjects\n";
}

void cmd_parse(Context& ctx) {
    const auto sys = ctx.system();
    const auto digest = stage_digest({ctx.store.digest(kChunks, "chunk"), ctx.backend_descriptor(ctx.cfg.model)});
    if (skip_if_current(ctx, "parse", digest)) return;
    const auto chunks = serialize::from_rows<ingest::Chunk>(ctx.store.read_rows(kChunks, "chunk"), serialize::chunk_from_json);
    auto b = ctx.backend(sys);
    const auto parsed = perception::parse_chunks(chunks, *b, ctx.cfg.model);
    ctx.store.write_rows(kPerceptions, serialize::to_rows<perception::Perception>(parsed.perceptions));
    ctx.store.write_rows(kSkipped, serialize::to_rows<perception::SkipRecord>(parsed.skipped));
    ctx.store.mark_stage("parse", digest, {kPerceptions, kSkipped});
    ctx.out << "parse: " << parsed.perceptions.size() << " perceptions, " << parsed.skipped.size() << " chunks skipped\n";
}

void cmd_score(Context& ctx) {
    const auto sys = ctx.system();
    const auto digest = stage_digest({ctx.store.digest(kPerceptions, "parse"), serialize::to_json(sys).dump(),
                                      ctx.backend_descriptor(ctx.cfg.model)});
    if (skip_if_current(ctx, "score", digest)) return;
    const auto perceptions = serialize::from_rows<perception::Perception>(ctx.store.read_rows(kPerceptions, "parse"),
                                                                          serialize::perception_from_json);
    auto b = ctx.backend(sys);
    const auto scores = scoring::score_perceptions(sys, perceptions, *b, ctx.cfg.model);
    ctx.store.write_rows(kScores, serialize::to_rows<scoring::PerceptionScore>(scores));
    ctx.store.mark_stage("score", digest, {kScores});
    const auto measured = std::count_if(scores.begin(), scores.end(), [](const auto& s) { return s.w.has_value(); });
    ctx.out << "score: " << scores.size() << " (value, perception) pairs, " << measured << " measured\n";
}

void cmd_aggregate(Context& ctx) {
    const auto sys = ctx.system();
    const auto out_file = vectors_file("gpv");
    const auto digest = stage_digest({ctx.store.digest(kScores, "score"), ctx.store.digest(kSubjects, "ingest"),
                                      serialize::to_json(sys).dump()});
    if (skip_if_current(ctx, "aggregate", digest)) return;
    const auto scores = serialize::from_rows<scoring::PerceptionScore>(ctx.store.read_rows(kScores, "score"),
                                                                       serialize::score_from_json);
    const auto ids = subject_ids(read_subjects(ctx));
    const auto vectors = scoring::aggregate_batch(scores, sys, ids);
    ctx.store.write_rows(out_file, serialize::to_rows<ValueVector>(vectors));
    ctx.store.mark_stage("aggregate", digest, {out_file});
    ctx.out << "aggregate: " << vectors.size() << " value vectors\n";
}

void cmd_elicit(Context& ctx) {
    const auto sys = ctx.system();
    auto b = ctx.backend(sys);
    const auto qdigest = stage_digest({serialize::to_json(sys).dump(), ctx.backend_descriptor(ctx.cfg.question_model)});
    if (!skip_if_current(ctx, "elicit.questions", qdigest)) {
        std::vector<json> rows;
        for (const auto& v : sys.values()) rows.push_back(serialize::to_json(perception::generate_questions(v, *b, ctx.cfg.question_model)));
        ctx.store.write_rows(kQuestions, rows);
        ctx.store.mark_stage("elicit.questions", qdigest, {kQuestions});
    }
    const auto sets = serialize::from_rows<perception::ElicitationSet>(ctx.store.read_rows(kQuestions, "elicit"),
                                                                       serialize::elicitation_from_json);
    const auto id = ctx.opt.subject_id.empty() ? ctx.cfg.model : ctx.opt.subject_id;
    const auto record = perception::collect_responses(sets, *b, ctx.cfg.model, id);
    ctx.store.write_rows(kSubjects, upsert(rows_or_empty(ctx, kSubjects), "subject_id", id, {serialize::to_json(record)}));
    ctx.store.mark_stage("elicit." + id, qdigest, {kSubjects, kQuestions});
    ctx.out << "elicit: " << id << " answered " << sets.size() * perception::kQuestionsPerValue << " questions\n";
}

// ---------------------------------------------------------------------------
// Baselines

void run_administration(Context& ctx, Tool tool) {
    if (ctx.opt.inventory.empty()) throw ValidationError("this baseline needs --inventory");
    const auto sys = ctx.system();
    const auto items = baselines::load_inventory(ctx.opt.inventory);
    const auto id = ctx.opt.subject_id.empty() ? ctx.cfg.model : ctx.opt.subject_id;
    const std::string name(to_string(tool));
    const auto digest = stage_digest({file_sha256(ctx.opt.inventory), serialize::to_json(sys).dump(), id,
                                      ctx.backend_descriptor(ctx.cfg.model), ctx.cfg.evaluator_model});
    const std::string stage = "baseline." + name + "." + id;
    if (skip_if_current(ctx, stage, digest)) return;

    auto b = ctx.backend(sys);
    baselines::AdministerOptions opts{id, ctx.cfg.model, ctx.cfg.evaluator_model};
    const auto result = tool == Tool::self_report ? baselines::run_self_report(items, sys, *b, opts)
                                                  : baselines::run_valuebench(items, sys, *b, *b, opts);
    const auto vfile = vectors_file(name);
    const auto lfile = "vectors/" + name + "_items.jsonl";
    ctx.store.write_rows(vfile, upsert(rows_or_empty(ctx, vfile), "subject_id", id, {serialize::to_json(result.vector)}));
    std::vector<json> logs;
    for (const auto& l : result.items) {
        auto j = serialize::to_json(l);
        j["subject_id"] = id;
        logs.push_back(std::move(j));
    }
    ctx.store.write_rows(lfile, upsert(rows_or_empty(ctx, lfile), "subject_id", id, std::move(logs)));
    ctx.store.mark_stage(stage, digest, {vfile, lfile});
    const auto missing = std::count_if(result.items.begin(), result.items.end(), [](const auto& l) { return !l.score; });
    ctx.out << "baseline " << name << ": " << id << ", " << result.items.size() << " items, " << missing << " missing\n";
}

void cmd_dictionary(Context& ctx) {
    if (ctx.opt.lexicon.empty()) throw ValidationError("baseline dictionary needs --lexicon");
    const auto sys = ctx.system();
    const auto vfile = vectors_file("dictionary");
    const auto digest = stage_digest({file_sha256(ctx.opt.lexicon), ctx.store.digest(kSubjects, "ingest"), serialize::to_json(sys).dump()});
    if (skip_if_current(ctx, "baseline.dictionary", digest)) return;
    const auto lex = baselines::load_lexicon(ctx.opt.lexicon);
    const auto subjects = read_subjects(ctx);
    const auto vectors = baselines::dictionary_score_batch(subjects, lex, sys);
    ctx.store.write_rows(vfile, serialize::to_rows<ValueVector>(vectors));
    ctx.store.mark_stage("baseline.dictionary", digest, {vfile});
    ctx.out << "baseline dictionary: " << vectors.size() << " subjects scored\n";
}

// ---------------------------------------------------------------------------
// Analyses

void cmd_stability(Context& ctx) {
    analysis::StabilityTable table;
    if (!ctx.opt.counts.empty()) {
        table = analysis::stability_from_counts(ctx.opt.counts);
    } else {
        const auto vectors = read_vectors(ctx, Tool::gpv);
        const auto scores = serialize::from_rows<scoring::PerceptionScore>(ctx.store.read_rows(kScores, "score"),
                                                                           serialize::score_from_json);
        table = analysis::stability(vectors, scores);
    }
    ctx.store.write_text("analysis/stability.csv", analysis::stability_csv(table));
    ctx.store.write_text("analysis/stability.json", serialize::to_json(table).dump(2) + "\n");
    const auto sum = table.sum();
    ctx.out << "stability: p_ss=" << records::format_number(sum.p_ss()) << " p_oo=" << records::format_number(sum.p_oo())
            << " p_same=" << records::format_number(sum.p_same()) << " over " << sum.counts.total() << " pairs\n";
}

void cmd_construct(Context& ctx) {
    const auto tool = tool_from_string(ctx.opt.tool);
    auto batch = read_vectors(ctx, tool);
    if (ctx.opt.center) batch = analysis::center_rows(batch);
    const std::string prefix = "analysis/construct_" + std::string(to_string(tool)) + (ctx.opt.center ? "_centered" : "");
    const auto pear = analysis::pearson_matrix(batch);
    const auto cos = analysis::cosine_matrix(batch);
    const auto dist = analysis::to_distance(cos);
    const auto emb = analysis::classical_mds(dist, 2);
    ctx.store.write_text(prefix + "/pearson.csv", analysis::matrix_csv(pear));
    ctx.store.write_text(prefix + "/cosine.csv", analysis::matrix_csv(cos));
    ctx.store.write_text(prefix + "/distance.csv", analysis::matrix_csv(dist));
    ctx.store.write_text(prefix + "/embedding.csv", analysis::embedding_csv(emb));
    ctx.store.write_text(prefix + "/embedding.json", serialize::to_json(emb).dump(2) + "\n");
    ctx.store.write_text(prefix + "/heatmap.svg", report::heatmap_svg(pear, "Pearson correlation (" + ctx.opt.tool + ")"));
    ctx.store.write_text(prefix + "/mds.svg", report::scatter_svg(emb, "Classical MDS of cosine distance (" + ctx.opt.tool + ")"));
    ctx.out << "construct: " << pear.size() << " values over " << batch.size() << " subjects -> " << prefix << "/\n";
}

void cmd_concurrent(Context& ctx) {
    const auto a_tool = tool_from_string(ctx.opt.tool);
    const auto b_tool = tool_from_string(ctx.opt.with.empty() ? "dictionary" : ctx.opt.with);
    const auto a = read_vectors(ctx, a_tool);
    const auto b = read_vectors(ctx, b_tool);
    const auto m = analysis::cross_matrix(a, b);
    const std::string name = "analysis/concurrent_" + std::string(to_string(a_tool)) + "_" + std::string(to_string(b_tool));
    ctx.store.write_text(name + ".csv", analysis::cross_matrix_csv(m));
    // Same-named values side by side: the convergent correlations.
    std::string diag = "value,pearson\n";
    for (std::size_t i = 0; i < m.row_labels.size(); ++i) {
        auto j = std::find(m.col_labels.begin(), m.col_labels.end(), m.row_labels[i]);
        if (j == m.col_labels.end()) continue;
        diag += records::csv_row(std::vector<std::string>{m.row_labels[i], records::format_number(m.cells[i][static_cast<std::size_t>(j - m.col_labels.begin())])});
    }
    ctx.store.write_text(name + "_matched.csv", diag);
    ctx.out << "concurrent: " << m.row_labels.size() << "x" << m.col_labels.size() << " correlations -> " << name << ".csv\n";
}

void cmd_predictive(Context& ctx) {
    if (ctx.opt.attr.empty()) throw ValidationError("analyze predictive needs --attr");
    const auto tool = tool_from_string(ctx.opt.tool);
    const auto batch = read_vectors(ctx, tool);
    const auto groups = analysis::attribute_groups(read_subjects(ctx), ctx.opt.attr);
    const auto means = analysis::group_means(batch, groups);
    const std::string file = "analysis/predictive_" + std::string(to_string(tool)) + "_" + safe_name(ctx.opt.attr) + ".csv";
    ctx.store.write_text(file, analysis::group_means_csv(means));
    ctx.out << "predictive: " << means.size() << " groups by " << ctx.opt.attr << " -> " << file << "\n";
}

void cmd_probe(Context& ctx) {
    if (ctx.opt.safety.empty()) throw ValidationError("analyze probe needs --safety");
    const auto tool = tool_from_string(ctx.opt.tool);
    const auto batch = read_vectors(ctx, tool);
    const auto safety = probe::load_safety(ctx.opt.safety);
    probe::ProbeConfig pc;
    pc.seed = ctx.cfg.seed;
    if (ctx.opt.repeats) pc.repeats = *ctx.opt.repeats;
    if (ctx.opt.epochs) pc.epochs = *ctx.opt.epochs;
    const auto features = probe::normalize_features(batch);
    const auto rep = probe::run_experiment(features, safety, pc);
    const std::string prefix = "analysis/probe_" + std::string(to_string(tool));
    const auto system = batch.empty() ? std::string{} : batch.front().system_name();
    ctx.store.write_text(prefix + "_summary.csv", probe::report_summary_csv(rep, to_string(tool), system));
    ctx.store.write_text(prefix + "_weights.csv", probe::report_weights_csv(rep));
    ctx.store.write_text(prefix + "_report.json", serialize::to_json(rep).dump(2) + "\n");
    ctx.out << "probe: mean_acc=" << records::format_number(rep.mean_accuracy)
            << " std_acc=" << records::format_number(rep.std_accuracy) << " over " << pc.repeats << " repeats\n";
}

void cmd_cross(Context& ctx) {
    if (ctx.opt.with.empty()) throw ValidationError("analyze cross needs --with <vectors file of another system>");
    const auto tool = tool_from_string(ctx.opt.tool);
    const auto a = read_vectors(ctx, tool);
    if (!fs::exists(ctx.opt.with)) throw MissingArtifactError(ctx.opt.with + " not found");
    const auto b = serialize::from_rows<ValueVector>(records::read_jsonl(ctx.opt.with), serialize::value_vector_from_json);
    if (a.empty() || b.empty()) throw ValidationError("cross-system correlation needs non-empty batches");
    const auto sa = a.front().system_name();
    const auto sb = b.front().system_name();
    for (auto spec : analysis::builtin_cross_pairs()) {
        const bool swapped = spec.system_a == sb && spec.system_b == sa;
        if (!(spec.system_a == sa && spec.system_b == sb) && !swapped) continue;
        if (swapped) {
            std::swap(spec.system_a, spec.system_b);
            for (auto& p : spec.pairs) std::swap(p.value_a, p.value_b);
        }
        const auto r = analysis::cross_system_correlation(a, b, spec.pairs);
        const std::string file = "analysis/cross_" + safe_name(sa) + "_" + safe_name(sb) + ".csv";
        ctx.store.write_text(file, analysis::cross_pairs_csv(spec, r));
        for (std::size_t i = 0; i < spec.pairs.size(); ++i) {
            ctx.out << "cross: " << spec.pairs[i].value_a << " & " << spec.pairs[i].value_b << " r="
                    << (r[i] ? records::format_number(r[i]) : std::string("n/a")) << "\n";
        }
        return;
    }
    throw ValidationError("no built-in value pairs relate " + sa + " and " + sb);
}

void cmd_report(Context& ctx) {
    const auto tool = tool_from_string(ctx.opt.tool);
    const auto batch = read_vectors(ctx, tool);
    const std::string dir = "reports/" + std::string(to_string(tool));
    for (const auto& v : batch) {
        const std::span<const ValueVector> one(&v, 1);
        ctx.store.write_text(dir + "/" + safe_name(v.subject_id()) + ".svg", report::radar_svg(one, v.subject_id()));
    }
    if (!batch.empty()) ctx.store.write_text(dir + "/all.svg", report::radar_svg(batch, std::string(to_string(tool)) + " value profiles"));
    ctx.out << "report: " << batch.size() << " radar charts -> " << dir << "/\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Value measurement pipeline: parse text into perceptions, score them against value systems, and validate the results."};
    app.name("gpv");
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string run_id, out_dir, backend_s, model, evaluator_model, question_model, system, cache, api_base;
    std::size_t chunk_size = 0, concurrency = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> fixtures;
    bool no_logprobs = false, verbose = false, quiet = false;
    CommandOptions opt;

    app.add_option("--config", config_path, "Flat key = value config file");
    auto* o_run = app.add_option("--run-id", run_id, "Run directory name under --out");
    auto* o_out = app.add_option("--out", out_dir, "Output root (default: runs)");
    auto* o_backend = app.add_option("--backend", backend_s, "http, replay, or oracle")->check(CLI::IsMember({"http", "replay", "oracle"}));
    auto* o_model = app.add_option("--model", model, "Model name sent to the backend");
    auto* o_eval = app.add_option("--evaluator-model", evaluator_model, "Evaluator model for valuebench");
    auto* o_qmodel = app.add_option("--question-model", question_model, "Model that writes elicitation questions");
    auto* o_system = app.add_option("--system", system, "Built-in system name, or file[:system]");
    auto* o_chunk = app.add_option("--chunk-size", chunk_size, "Chunk size in tokens")->check(CLI::PositiveNumber);
    auto* o_conc = app.add_option("--concurrency", concurrency, "Maximum in-flight backend requests")->check(CLI::PositiveNumber);
    auto* o_seed = app.add_option("--seed", seed, "Seed for stochastic analyses");
    auto* o_cache = app.add_option("--cache", cache, "Response cache file (line-delimited)");
    auto* o_fix = app.add_option("--fixtures", fixtures, "Replay fixture files");
    auto* o_api = app.add_option("--api-base", api_base, "Inference server base URL (GPV_API_BASE overrides)");
    app.add_flag("--no-logprobs", no_logprobs, "Read labels from generated text instead of token log-probabilities");
    app.add_flag("-v,--verbose", verbose, "Debug logging");
    app.add_flag("-q,--quiet", quiet, "Errors only");
    app.add_option("--input", opt.input, "Corpus file for ingest");
    app.add_option("--min-words", opt.min_words, "Filter threshold: keep texts with more words than this");
    app.add_flag("--no-filter", opt.no_filter, "Ingest without the quality filter");
    app.add_option("--safety", opt.safety, "Safety table {subject_id, safety_score}");
    app.add_option("--lexicon", opt.lexicon, "Lexicon file {value, word}");
    app.add_option("--inventory", opt.inventory, "Inventory file {item_id, text, value, reverse, scale_min, scale_max}");
    app.add_option("--subject-id", opt.subject_id, "Subject id for baseline or elicitation results (default: --model)");
    app.add_option("--counts", opt.counts, "Stability counts file {value, ss, oo, so, os}");
    app.add_option("--tool", opt.tool, "Vector set to analyse: gpv, self_report, valuebench, dictionary");
    app.add_option("--with", opt.with, "Second vector set: a tool name (concurrent) or a vectors file (cross)");
    app.add_option("--attr", opt.attr, "Metadata attribute for group means");
    app.add_flag("--center", opt.center, "Center each subject's scores before construct analysis");
    app.add_option("--repeats", opt.repeats, "Probe repeats")->check(CLI::PositiveNumber);
    app.add_option("--epochs", opt.epochs, "Probe training epochs")->check(CLI::PositiveNumber);

    std::function<void(Context&)> action;
    auto bind = [&](CLI::App* sub, void (*fn)(Context&)) { sub->callback([&, fn] { action = fn; }); };
    bind(app.add_subcommand("ingest", "Load a corpus and apply the quality filter"), cmd_ingest);
    bind(app.add_subcommand("chunk", "Split subject texts into token-bounded chunks"), cmd_chunk);
    bind(app.add_subcommand("parse", "Extract perceptions from chunks"), cmd_parse);
    bind(app.add_subcommand("score", "Score every (value, perception) pair"), cmd_score);
    bind(app.add_subcommand("aggregate", "Average measured scores into per-subject value vectors"), cmd_aggregate);
    bind(app.add_subcommand("elicit", "Generate value-eliciting questions and record a model's answers as a subject"), cmd_elicit);
    auto* baseline = app.add_subcommand("baseline", "Comparison instruments");
    baseline->require_subcommand(1);
    bind(baseline->add_subcommand("self-report", "Likert self-report administration"),
         [](Context& c) { run_administration(c, Tool::self_report); });
    bind(baseline->add_subcommand("valuebench", "Free-form answers rated by an evaluator"),
         [](Context& c) { run_administration(c, Tool::valuebench); });
    bind(baseline->add_subcommand("dictionary", "Lexicon match rates per 1000 words"), cmd_dictionary);
    auto* analyze = app.add_subcommand("analyze", "Validation analyses");
    analyze->require_subcommand(1);
    bind(analyze->add_subcommand("stability", "Sign agreement between perceptions and subject aggregates"), cmd_stability);
    bind(analyze->add_subcommand("construct", "Correlation, cosine distance, and MDS embedding of values"), cmd_construct);
    bind(analyze->add_subcommand("concurrent", "Correlation against another tool's vectors"), cmd_concurrent);
    bind(analyze->add_subcommand("predictive", "Group means by a metadata attribute"), cmd_predictive);
    bind(analyze->add_subcommand("probe", "Pairwise linear probe predicting relative safety"), cmd_probe);
    bind(analyze->add_subcommand("cross", "Correlate aligned values across two systems"), cmd_cross);
    bind(app.add_subcommand("report", "Radar charts per subject"), cmd_report);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : exit_code(ErrorKind::validation);
    }

    spdlog::set_level(verbose ? spdlog::level::debug : (quiet ? spdlog::level::err : spdlog::level::warn));
    try {
        RunConfig cfg;
        if (!config_path.empty()) apply_config_file(cfg, config_path);
        if (o_run->count()) cfg.run_id = run_id;
        if (o_out->count()) cfg.output_dir = out_dir;
        if (o_backend->count()) cfg.backend = backend_kind_from_string(backend_s);
        if (o_model->count()) cfg.model = model;
        if (o_eval->count()) cfg.evaluator_model = evaluator_model;
        if (o_qmodel->count()) cfg.question_model = question_model;
        if (o_system->count()) cfg.system = system;
        if (o_chunk->count()) cfg.chunk_size = chunk_size;
        if (o_conc->count()) cfg.concurrency = concurrency;
        if (o_seed->count()) cfg.seed = seed;
        if (o_cache->count()) cfg.cache_path = cache;
        if (o_fix->count()) cfg.fixtures = fixtures;
        if (o_api->count()) cfg.api_base = api_base;
        if (no_logprobs) cfg.request_logprobs = false;

        Context ctx(cfg, opt, out);
        ctx.store.set_config(config_json(ctx.cfg));
        action(ctx);
        return 0;
    } catch (const Error& e) {
        err << "gpv: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        err << "gpv: " << e.what() << "\n";
        return exit_code(ErrorKind::validation);
    }
}

}  // namespace gpv::cli
