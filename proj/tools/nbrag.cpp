// Command line entry point: ingest, index, serve, query.

#include <csignal>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "nbrag/config.hpp"
#include "nbrag/engine.hpp"
#include "nbrag/error.hpp"
#include "nbrag/http_service.hpp"
#include "nbrag/index_store.hpp"
#include "nbrag/pipeline.hpp"

namespace {

using namespace nbrag;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kMissingMapping:
      return 2;
    case ErrorCode::kIo:
    case ErrorCode::kMalformedDocument:
      return 3;
    case ErrorCode::kInvalidSettings:
    case ErrorCode::kEmptyText:
    case ErrorCode::kUnknownCompetition:
      return 4;
    case ErrorCode::kProviderError:
    case ErrorCode::kTimeout:
      return 5;
    default:
      return 1;
  }
}

std::string fit(const std::string& text, std::size_t width) {
  if (text.size() <= width) return text;
  return text.substr(0, width - 3) + "...";
}

class PrintingSink final : public ChatEventSink {
 public:
  void on_token(std::string_view fragment) override { std::cout << fragment << std::flush; }
  void on_sources(const std::vector<RetrievedSource>& sources) override { sources_ = sources; }
  void on_error(std::string_view message) override { std::cerr << "\nerror: " << message << "\n"; }
  void on_done(FinishReason) override { std::cout << "\n"; }

  const std::vector<RetrievedSource>& sources() const { return sources_; }

 private:
  std::vector<RetrievedSource> sources_;
};

void print_source_table(const std::vector<RetrievedSource>& sources) {
  std::cout << std::left << std::setw(5) << "rank" << std::setw(42) << "title" << std::right
            << std::setw(7) << "votes" << std::setw(9) << "views" << "  " << "url" << "\n";
  for (const auto& s : sources) {
    std::cout << std::left << std::setw(5) << s.rank_position << std::setw(42)
              << fit(s.meta.title, 40) << std::right << std::setw(7) << s.meta.vote_count
              << std::setw(9) << s.meta.view_count << "  " << s.meta.url << "\n";
  }
}

std::unique_ptr<HttpService> g_service;

void handle_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Notebook retrieval-augmented chat engine"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "Engine config file")->required();

  auto* ingest_cmd = app.add_subcommand("ingest", "Parse notebooks and metadata, report counts");
  auto* index_cmd = app.add_subcommand("index", "Embed chunks and write the index");

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP chat service");
  int port = -1;
  std::vector<std::string> extra_indexes;
  serve_cmd->add_option("--port", port, "Override service.port (0 picks a free port)");
  serve_cmd->add_option("--index", extra_indexes, "Additional index directories to load");

  auto* query_cmd = app.add_subcommand("query", "One-shot retrieve and answer");
  std::string question;
  std::string competition;
  std::string mode = "community";
  std::string rank_mode;
  std::optional<int> n_sources;
  std::optional<double> lambda;
  std::string index_dir;
  query_cmd->add_option("question", question, "Question text")->required();
  query_cmd->add_option("--competition", competition, "Competition id (must match the index)");
  query_cmd->add_option("--mode", mode,
                        "community | rag_hidden | plain (relevance | votes | views also "
                        "accepted as a ranking shorthand)");
  query_cmd->add_option("--rank", rank_mode, "relevance | votes | views");
  query_cmd->add_option("--n", n_sources, "Number of sources (1-10)");
  query_cmd->add_option("--lambda", lambda, "MMR diversity weight in [0, 1]");
  query_cmd->add_option("--index", index_dir, "Index directory (defaults to index.dir)");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto config = load_config(config_path);

    if (*ingest_cmd) {
      auto result = ingest(config);
      for (const auto& d : result.parse.diagnostics) std::cerr << "skip: " << d << "\n";
      for (const auto& d : result.metadata.diagnostics) std::cerr << "metadata: " << d << "\n";
      for (const auto& w : result.metadata.warnings) std::cerr << "warning: " << w << "\n";
      for (const auto& d : result.build.report.diagnostics) std::cerr << "reject: " << d << "\n";
      std::cout << format_ingest_report(result);
      return 0;
    }

    if (*index_cmd) {
      if (config.index_dir.empty()) throw Error(ErrorCode::kConfig, "index.dir is required");
      auto result = ingest(config);
      std::cout << format_ingest_report(result);
      auto embedder = make_embedder(config.embedder);
      auto index = build_index(result.build.corpus, *embedder);
      save_index(index, config.index_dir);
      std::cout << "chunks indexed: " << index.chunk_count() << "\n"
                << "index written: " << config.index_dir.string() << "\n";
      return 0;
    }

    EngineOptions engine_options;
    engine_options.prompt = config.prompt;
    engine_options.sources_first = config.service.sources_first;
    engine_options.max_session_turns = config.service.max_session_turns;

    if (*serve_cmd) {
      engine_options.session_dir = config.service.session_dir;
      ChatEngine engine(make_llm(config.llm), engine_options);
      std::vector<std::filesystem::path> dirs;
      if (!config.index_dir.empty()) dirs.push_back(config.index_dir);
      for (const auto& d : extra_indexes) dirs.emplace_back(d);
      for (const auto& d : dirs) {
        auto loaded = std::make_shared<const CompetitionIndex>(load_index(d));
        std::cerr << "loaded " << loaded->competition_id << " (" << loaded->chunk_count()
                  << " chunks)\n";
        engine.add_index(std::move(loaded));
      }
      auto options = config.service;
      if (port >= 0) options.port = port;
      g_service = std::make_unique<HttpService>(engine, options, config.search);
      const int bound = g_service->bind();
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      std::cout << "listening on http://" << options.host << ":" << bound << std::endl;
      g_service->run();
      g_service.reset();
      return 0;
    }

    // query
    SearchSettings settings = config.search;
    ConditionMode condition = ConditionMode::kCommunity;
    if (mode == "relevance" || mode == "votes" || mode == "views") {
      settings.ranking_mode = parse_ranking_mode(mode);
    } else {
      condition = parse_condition_mode(mode);
    }
    if (!rank_mode.empty()) settings.ranking_mode = parse_ranking_mode(rank_mode);
    if (n_sources) settings.n_sources = *n_sources;
    if (lambda) settings.mmr_lambda = *lambda;

    const std::filesystem::path dir =
        index_dir.empty() ? config.index_dir : std::filesystem::path(index_dir);
    if (dir.empty()) throw Error(ErrorCode::kConfig, "index.dir is required");
    auto loaded = std::make_shared<const CompetitionIndex>(load_index(dir));
    if (!competition.empty() && competition != loaded->competition_id) {
      throw Error(ErrorCode::kUnknownCompetition,
                  "index at " + dir.string() + " is for " + loaded->competition_id);
    }

    ChatEngine engine(make_llm(config.llm), engine_options);
    const std::string competition_id = loaded->competition_id;
    engine.add_index(std::move(loaded));
    ChatRequest request{engine.create_session(competition_id), question, settings, condition};

    PrintingSink sink;
    auto outcome = engine.chat(request, sink);
    if (condition == ConditionMode::kCommunity) {
      std::cout << "\n";
      print_source_table(sink.sources());
    }
    if (outcome.generation.finish_reason == FinishReason::kError) {
      return exit_code_for(ErrorCode::kProviderError);
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
