#include <doctest.h>

#include <cmath>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "synthkit/errors.hpp"
#include "synthkit/eval.hpp"
#include "synthkit/prompts.hpp"
#include "synthkit/util.hpp"
#include "test_helpers.hpp"

using namespace synthkit;

namespace {

WhitespaceTokenizer tok;

MCQAItem sample_item(int options = 4) {
  MCQAItem item;
  item.item_id = "q1";
  item.question = "What is the capital of France?";
  const char* texts[] = {"Paris", "Lyon", "Nice", "Marseille", "Toulouse"};
  for (int i = 0; i < options; ++i) {
    item.options.push_back({static_cast<char>('A' + i), texts[i]});
  }
  item.gold = 'A';
  return item;
}

void pin(MockBackend& mock, PromptKind kind, const std::string& prompt, std::vector<std::string> texts) {
  mock.set_fixture(static_cast<int>(kind), MockBackend::prompt_hash(prompt), std::move(texts));
}

Corpus words_corpus(std::vector<int> doc_token_counts) {
  Corpus corpus;
  corpus.name = "c";
  int d = 0;
  for (int count : doc_token_counts) {
    Document doc;
    doc.id = "d" + std::to_string(d++);
    doc.title = "Doc " + doc.id;
    for (int i = 0; i < count; ++i) {
      if (i > 0) doc.text += " ";
      doc.text += doc.id + "t" + std::to_string(i);
    }
    doc.token_count = tok.count(doc.text);
    corpus.total_tokens += doc.token_count;
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Test-only scorer that reverses whatever order it is given.
class InvertingScorer final : public RerankScorer {
 public:
  std::vector<double> score(const std::string&, const std::vector<std::string>& documents) override {
    std::vector<double> scores(documents.size());
    for (std::size_t i = 0; i < documents.size(); ++i) scores[i] = static_cast<double>(i);
    return scores;
  }
};

}  // namespace

TEST_CASE("render_mcqa_prompt lays out lettered choices") {
  MCQAItem item = sample_item(4);
  std::string prompt = render_mcqa_prompt(item);
  CHECK(prompt.find("### Question") != std::string::npos);
  CHECK(prompt.find("### Choices") != std::string::npos);
  CHECK(prompt.find("A. Paris\nB. Lyon\nC. Nice\nD. Marseille") != std::string::npos);
  CHECK(prompt.find("only one letter, A, B, C, D, or E") != std::string::npos);

  MCQAItem five = sample_item(5);
  CHECK(render_mcqa_prompt(five).find("E. Toulouse") != std::string::npos);

  // Embedded newlines in option text are preserved verbatim.
  MCQAItem weird = sample_item(2);
  weird.options[1].text = "Lyon\nwith a second line";
  CHECK(render_mcqa_prompt(weird).find("B. Lyon\nwith a second line") != std::string::npos);
}

TEST_CASE("validate_item rejects malformed items") {
  MCQAItem item = sample_item(4);
  item.gold = 'E';
  CHECK_THROWS_AS(validate_item(item), ValidationError);
  item = sample_item(1);
  CHECK_THROWS_AS(validate_item(item), ValidationError);
  item = sample_item(3);
  item.options[2].letter = 'D';
  CHECK_THROWS_AS(validate_item(item), ValidationError);
}

TEST_CASE("parse_answer extracts the last Answer line") {
  CHECK(parse_answer("Explanation: reasoning here.\nAnswer: B") == 'B');
  CHECK(parse_answer("Answer: A\nmore thinking\nAnswer: (C)") == 'C');
  CHECK(parse_answer("Answer: [D]") == 'D');
  CHECK(parse_answer("  Answer:   E.") == 'E');
  CHECK(parse_answer("Answer: \"A\"") == 'A');
  CHECK_FALSE(parse_answer("I think the answer is B").has_value());
  CHECK_FALSE(parse_answer("Answer: Because of gravity").has_value());
  CHECK_FALSE(parse_answer("Answer: f") == 'F');
  CHECK_FALSE(parse_answer("Answer:").has_value());
  CHECK_FALSE(parse_answer("").has_value());
}

TEST_CASE("evaluate_mcqa pools accuracy over samples") {
  MockBackend mock(2);
  MCQAItem item = sample_item(4);
  std::vector<std::string> replies;
  for (int i = 0; i < 6; ++i) replies.push_back("Explanation: e.\nAnswer: A");
  replies.push_back("Explanation: e.\nAnswer: B");
  replies.push_back("Explanation: e.\nAnswer: C");
  pin(mock, PromptKind::Mcqa, render_mcqa_prompt(item), replies);

  EvalResult result = evaluate_mcqa({item}, "m", mock, 8);
  REQUIRE(result.per_item.size() == 1);
  CHECK(result.per_item[0].n_correct == 6);
  CHECK(result.per_item[0].n_samples == 8);
  CHECK(result.mean_accuracy == doctest::Approx(0.75));
  CHECK(result.band.has_value());
}

TEST_CASE("evaluate_mcqa pools across items and counts failures as incorrect") {
  MockBackend mock(2);
  MCQAItem first = sample_item(4);
  MCQAItem second = sample_item(4);
  second.item_id = "q2";
  second.question = "Different question?";
  pin(mock, PromptKind::Mcqa, render_mcqa_prompt(first), {"Answer: A"});    // always right
  pin(mock, PromptKind::Mcqa, render_mcqa_prompt(second), {"Answer: B"});   // always wrong
  EvalResult result = evaluate_mcqa({first, second}, "m", mock, 8);
  CHECK(result.mean_accuracy == doctest::Approx(0.5));

  pin(mock, PromptKind::Mcqa, render_mcqa_prompt(first), {"no parseable marker"});
  pin(mock, PromptKind::Mcqa, render_mcqa_prompt(second), {"still nothing"});
  result = evaluate_mcqa({first, second}, "m", mock, 8);
  CHECK(result.mean_accuracy == 0.0);

  std::int64_t samples = 0;
  for (const auto& score : result.per_item) samples += score.n_samples;
  CHECK(samples == 16);
}

TEST_CASE("evaluate_mcqa is deterministic with a mock backend") {
  MockBackend mock(2);
  auto items = std::vector<MCQAItem>{sample_item(4)};
  EvalResult a = evaluate_mcqa(items, "m", mock, 8);
  EvalResult b = evaluate_mcqa(items, "m", mock, 8);
  CHECK(a.mean_accuracy == b.mean_accuracy);
  CHECK(a.per_item[0].n_correct == b.per_item[0].n_correct);
  CHECK(a.band == b.band);
}

TEST_CASE("build_rag_index chunks and embeds the corpus") {
  MockBackend mock(7, 16);
  Corpus corpus = words_corpus({600, 600});
  RagIndex index = build_rag_index(corpus, mock, "embed", tok, 512, 64);
  CHECK(index.chunks.size() == 4);  // stride 448: starts 0 and 448 per document
  CHECK(index.vectors.size() == 4);

  Corpus small = words_corpus({40});
  index = build_rag_index(small, mock, "embed", tok, 512, 64);
  CHECK(index.chunks.size() == 1);

  Corpus empty;
  CHECK_THROWS_AS(build_rag_index(empty, mock, "embed", tok, 512, 64), ValidationError);
}

TEST_CASE("rag index round-trips through its files") {
  testutil::TempDir dir("ragidx");
  MockBackend mock(7, 8);
  Corpus corpus = words_corpus({100, 80});
  RagIndex index = build_rag_index(corpus, mock, "embed", tok, 32, 4);
  save_rag_index(index, dir.file("idx"));
  RagIndex back = load_rag_index(dir.file("idx"));
  REQUIRE(back.chunks.size() == index.chunks.size());
  for (std::size_t i = 0; i < back.chunks.size(); ++i) {
    CHECK(back.chunks[i].doc_id == index.chunks[i].doc_id);
    CHECK(back.chunks[i].index == index.chunks[i].index);
    CHECK(back.chunks[i].text == index.chunks[i].text);
  }
  CHECK(back.vectors.size() == index.vectors.size());
}

TEST_CASE("retrieve matches a brute-force cosine ranking") {
  MockBackend mock(13, 24);
  Corpus corpus = words_corpus({200, 150, 90});
  RagIndex index = build_rag_index(corpus, mock, "embed", tok, 24, 6);
  std::string query = "which document talks about d1?";

  auto ranked = retrieve(index, query, mock, "embed", 5);
  REQUIRE(ranked.size() == 5);

  auto query_vec = mock.embed("embed", {query}).vectors.front();
  std::vector<std::size_t> order(index.chunks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    double ca = cosine(query_vec, index.vectors[a]);
    double cb = cosine(query_vec, index.vectors[b]);
    if (ca != cb) return ca > cb;
    if (index.chunks[a].doc_id != index.chunks[b].doc_id) {
      return index.chunks[a].doc_id < index.chunks[b].doc_id;
    }
    return index.chunks[a].index < index.chunks[b].index;
  });
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    CHECK(ranked[i].doc_id == index.chunks[order[i]].doc_id);
    CHECK(ranked[i].index == index.chunks[order[i]].index);
  }

  // k1 past the chunk count returns everything.
  CHECK(retrieve(index, query, mock, "embed", 1000).size() == index.chunks.size());
}

TEST_CASE("retrieve breaks exact ties by (doc_id, index)") {
  MockBackend mock(13, 8);
  RagIndex index;
  // Two identical chunk texts embed identically, forcing a tie.
  index.chunks = {{"db", 0, "same text", 2}, {"da", 0, "same text", 2}, {"da", 1, "other words", 2}};
  std::vector<std::string> texts;
  for (const auto& c : index.chunks) texts.push_back(c.text);
  index.vectors = mock.embed("embed", texts).vectors;

  auto ranked = retrieve(index, "same text", mock, "embed", 3);
  bool da_before_db = false;
  for (const auto& chunk : ranked) {
    if (chunk.doc_id == "da" && chunk.text == "same text") {
      da_before_db = true;
      break;
    }
    if (chunk.doc_id == "db") break;
  }
  CHECK(da_before_db);
}

TEST_CASE("monotone k: a larger k1 extends the smaller ranking") {
  MockBackend mock(5, 16);
  Corpus corpus = words_corpus({300, 300});
  RagIndex index = build_rag_index(corpus, mock, "embed", tok, 16, 2);
  auto small = retrieve(index, "query text", mock, "embed", 4);
  auto large = retrieve(index, "query text", mock, "embed", 9);
  REQUIRE(large.size() >= small.size());
  for (std::size_t i = 0; i < small.size(); ++i) {
    CHECK(small[i].doc_id == large[i].doc_id);
    CHECK(small[i].index == large[i].index);
  }
}

TEST_CASE("rerank with the retrieval scorer preserves the prefix") {
  MockBackend mock(5, 16);
  Corpus corpus = words_corpus({200, 160});
  RagIndex index = build_rag_index(corpus, mock, "embed", tok, 16, 2);
  std::string query = "some query";
  auto candidates = retrieve(index, query, mock, "embed", 10);

  EmbeddingCosineScorer scorer(mock, "embed");
  auto reranked = rerank(query, candidates, scorer, 4);
  REQUIRE(reranked.size() == 4);
  for (std::size_t i = 0; i < reranked.size(); ++i) {
    CHECK(reranked[i].doc_id == candidates[i].doc_id);
    CHECK(reranked[i].index == candidates[i].index);
  }
}

TEST_CASE("rerank truncates gently and honors the scorer") {
  MockBackend mock(5, 16);
  std::vector<Chunk> candidates;
  for (int i = 0; i < 5; ++i) candidates.push_back({"d", i, "chunk " + std::to_string(i), 2});

  InvertingScorer inverting;
  auto reranked = rerank("q", candidates, inverting, 8);
  REQUIRE(reranked.size() == 5);  // k2 beyond the candidate count returns all
  for (int i = 0; i < 5; ++i) CHECK(reranked[static_cast<std::size_t>(i)].index == 4 - i);

  reranked = rerank("q", candidates, inverting, 2);
  REQUIRE(reranked.size() == 2);
  CHECK(reranked[0].index == 4);
  CHECK(reranked[1].index == 3);

  CHECK(rerank("q", {}, inverting, 3).empty());
}

TEST_CASE("render_rag_prompt stacks context above the question") {
  std::vector<Chunk> chunks{{"d", 0, "first chunk", 2}, {"d", 1, "second chunk", 2}};
  std::string freeform = render_rag_prompt(chunks, std::string("What?"));
  CHECK(freeform.find("first chunk\n\nsecond chunk\n\n### Question") != std::string::npos);
  CHECK(freeform.find("Answer the question using the document above.") != std::string::npos);

  MCQAItem item = sample_item(2);
  std::string mcqa = render_rag_prompt(chunks, item);
  CHECK(mcqa.find("first chunk") != std::string::npos);
  CHECK(mcqa.find("### Choices") != std::string::npos);
  CHECK(mcqa.find("first chunk") < mcqa.find("### Question"));

  std::string bare = render_rag_prompt({}, std::string("What?"));
  CHECK(bare.rfind("[no retrieved context]", 0) == 0);
}

TEST_CASE("judge_freeform parses verdict lines") {
  MockBackend mock(3);
  std::string prompt = prompts::judge("Q?", "gold answer", "candidate answer");
  pin(mock, PromptKind::Judge, prompt, {"Explanation: close enough.\nVerdict: CORRECT"});
  JudgeVerdict verdict = judge_freeform("Q?", "gold answer", "candidate answer", mock, "judge", "i1");
  CHECK(verdict.correct);
  CHECK(verdict.parsed);
  CHECK(verdict.item_id == "i1");

  pin(mock, PromptKind::Judge, prompt, {"Verdict: INCORRECT"});
  verdict = judge_freeform("Q?", "gold answer", "candidate answer", mock, "judge", "i1");
  CHECK_FALSE(verdict.correct);
  CHECK(verdict.parsed);

  pin(mock, PromptKind::Judge, prompt, {"freeform prose with no verdict line"});
  verdict = judge_freeform("Q?", "gold answer", "candidate answer", mock, "judge", "i1");
  CHECK_FALSE(verdict.correct);
  CHECK_FALSE(verdict.parsed);

  CHECK_THROWS_AS(judge_freeform("Q?", "", "candidate", mock, "judge"), ValidationError);
}

TEST_CASE("the default mock judge compares candidate against gold") {
  MockBackend mock(3);
  JudgeVerdict verdict = judge_freeform("Q?", "the answer", "the answer", mock, "judge");
  CHECK(verdict.correct);
  verdict = judge_freeform("Q?", "the answer", "something else", mock, "judge");
  CHECK_FALSE(verdict.correct);
}

TEST_CASE("http rerank scorer speaks the wire contract") {
  httplib::Server server;
  server.Post("/rerank", [](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    REQUIRE(body.contains("query"));
    auto documents = body.at("documents").get<std::vector<std::string>>();
    std::vector<double> scores;
    for (std::size_t i = 0; i < documents.size(); ++i) scores.push_back(static_cast<double>(i));
    res.set_content(nlohmann::json{{"scores", scores}}.dump(), "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  std::vector<Chunk> candidates;
  for (int i = 0; i < 4; ++i) candidates.push_back({"d", i, "chunk " + std::to_string(i), 2});
  RetryPolicy retry;
  retry.max_attempts = 2;
  retry.initial_delay_ms = 1;
  HttpRerankScorer scorer("http://127.0.0.1:" + std::to_string(port) + "/rerank", retry);
  auto reranked = rerank("q", candidates, scorer, 2);
  REQUIRE(reranked.size() == 2);
  CHECK(reranked[0].index == 3);  // the mock scores ascending by position
  CHECK(reranked[1].index == 2);

  server.stop();
  thread.join();

  HttpRerankScorer dead("http://127.0.0.1:1/rerank", retry);
  CHECK_THROWS_AS(dead.score("q", {"doc"}), GatewayError);
}
