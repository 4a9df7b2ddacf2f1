#include <doctest.h>

#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <random>

#include "prism/corpus.hpp"
#include "prism/error.hpp"
#include "prism/fsutil.hpp"
#include "test_support.hpp"

using namespace prism;
using testing_support::make_set;
using testing_support::temp_dir;

TEST_CASE("statement csv: basic row") {
  const auto r = parse_statement_csv("statement,label\n\"The planet Jupiter has many moons.\",1\n", "facts");
  REQUIRE(r.size() == 1);
  CHECK(r[0].statement == "The planet Jupiter has many moons.");
  CHECK(r[0].label == 1);
  CHECK(r[0].idx == 0);
  CHECK(r[0].domain == "facts");
}

TEST_CASE("statement csv: header only is empty") {
  CHECK(parse_statement_csv("statement,label\n", "x").empty());
  CHECK(parse_statement_csv("statement,label", "x").empty());
}

TEST_CASE("statement csv: quoting, CRLF, BOM, extra columns") {
  const std::string csv =
      "\xEF\xBB\xBF" "id,statement,label\r\n"
      "7,\"Says \"\"hi\"\", then leaves\",0\r\n"
      "8,\"two\nlines\",1\r\n";
  const auto r = parse_statement_csv(csv, "d");
  REQUIRE(r.size() == 2);
  CHECK(r[0].statement == "Says \"hi\", then leaves");
  CHECK(r[1].statement == "two\nlines");
  CHECK(r[1].idx == 1);
}

TEST_CASE("statement csv: errors name the line") {
  auto message = [](const std::string& csv) {
    try {
      parse_statement_csv(csv, "d");
    } catch (const DataError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("statement,label\na,1\nb,2\n").find("line 3") != std::string::npos);
  CHECK(message("statement,label\na,1\nb\n").find("line 3") != std::string::npos);
  CHECK(message("statement,label\n   ,1\n").find("line 2") != std::string::npos);
  CHECK(message("text,label\na,1\n").find("statement") != std::string::npos);
  CHECK(message("statement,label\n\"open,1\n").find("unterminated") != std::string::npos);
}

TEST_CASE("statement csv: 1008 rows keep count and labels through write/read") {
  std::vector<StatementRecord> recs;
  for (std::size_t i = 0; i < 1008; ++i) {
    recs.push_back({i, "Animal fact, number " + std::to_string(i) + " \"quoted\"", static_cast<std::uint8_t>(i % 3 == 0), "animals"});
  }
  const auto dir = temp_dir("csv");
  write_statement_csv(dir / "animals.csv", recs);
  const auto back = load_statement_csv(dir / "animals.csv", "animals");
  REQUIRE(back.size() == 1008);
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].label == recs[i].label);
    CHECK(back[i].statement == recs[i].statement);
  }
  CHECK_THROWS_AS(load_statement_csv(dir / "missing.csv", "x"), DataError);
}

TEST_CASE("templates: slot invariant and application") {
  CHECK(is_valid_template("[statement]"));
  CHECK_FALSE(is_valid_template("no slot"));
  CHECK_FALSE(is_valid_template("[statement] and [statement]"));
  CHECK_THROWS_AS(validate_template({"bad", "none here"}), DataError);

  CHECK(apply_template(bundled_template("P1"), "X.") == "Here is a statement: X.\nIs the above statement correct?");
  CHECK(apply_template(bundled_template("T10"), "X.") == "Does the statement 'X.' accurately reflect the truth?");
  CHECK(apply_template({"id", "[statement]"}, "Y") == "Y");
  StatementRecord s{0, "Z", 1, "d"};
  CHECK(apply_template(bundled_template("T5"), s) == "Is 'Z' a valid statement?");
}

TEST_CASE("templates: bundled set") {
  const auto& all = bundled_templates();
  REQUIRE(all.size() == 11);
  CHECK(all[0].id == "P1");
  for (std::size_t i = 1; i <= 10; ++i) CHECK(all[i].id == "T" + std::to_string(i));
  for (const auto& t : all) CHECK(is_valid_template(t.text));
  CHECK_THROWS_AS(bundled_template("T11"), DataError);
}

TEST_CASE("templates: apply is injective with a non-empty prefix and suffix") {
  const auto& t = bundled_template("T1");
  std::set<std::string> seen;
  for (const char* s : {"a", "b", "ab", "a'", "'a", ""}) CHECK(seen.insert(apply_template(t, s)).second);
}

TEST_CASE("templates: json round trip, shipped data file matches") {
  const auto dir = temp_dir("tpl");
  write_templates_json(dir / "t.json", bundled_templates());
  const auto back = load_templates_json(dir / "t.json");
  REQUIRE(back.size() == bundled_templates().size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].id == bundled_templates()[i].id);
    CHECK(back[i].text == bundled_templates()[i].text);
  }
  const auto shipped = load_templates_json(std::filesystem::path(PRISM_DATA_DIR) / "templates.json");
  REQUIRE(shipped.size() == bundled_templates().size());
  for (std::size_t i = 0; i < shipped.size(); ++i) CHECK(shipped[i].text == bundled_templates()[i].text);

  atomic_write_file(dir / "bad.json", "[{\"id\": \"x\", \"text\": \"no slot\"}]");
  CHECK_THROWS_AS(load_templates_json(dir / "bad.json"), DataError);
}

namespace {

EmbeddingSet small_set() {
  std::vector<float> v = {1.0f, -2.5f, 3.25f, 1e-30f, 0.1f, -0.0f};
  auto s = make_set(v, {1, 0}, 3, "tiny");
  return s;
}

}  // namespace

TEST_CASE("embedding store: round trip is byte identical") {
  const auto dir = temp_dir("store");
  const EmbeddingSet s = small_set();
  write_embedding_set(s, dir / "a");
  const EmbeddingSet r = read_embedding_set(dir / "a");
  CHECK(r.meta() == s.meta());
  REQUIRE(r.vectors().size() == s.vectors().size());
  CHECK(std::memcmp(r.vectors().data(), s.vectors().data(), s.vectors().size() * sizeof(float)) == 0);
  CHECK(std::equal(r.labels().begin(), r.labels().end(), s.labels().begin()));
  write_embedding_set(r, dir / "b");
  for (const char* f : {"meta.json", "embeddings.bin", "labels.bin", "statements.jsonl"}) {
    CHECK(read_file(dir / "a" / f) == read_file(dir / "b" / f));
  }
  // little-endian f32, row-major, no header
  const std::string bin = read_file(dir / "a" / "embeddings.bin");
  REQUIRE(bin.size() == 24);
  const unsigned char one[4] = {0x00, 0x00, 0x80, 0x3f};
  CHECK(std::memcmp(bin.data(), one, 4) == 0);
}

TEST_CASE("embedding store: 613 x 4096 loads with count 613") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<float> u(-1, 1);
  std::vector<float> v(613 * 4096);
  for (auto& x : v) x = u(gen);
  std::vector<std::uint8_t> labels(613);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 2;
  const auto dir = temp_dir("facts");
  write_embedding_set(make_set(v, labels, 4096, "facts"), dir);
  const auto r = read_embedding_set(dir);
  CHECK(r.count() == 613);
  CHECK(r.dim() == 4096);
}

TEST_CASE("embedding store: corruption and version errors") {
  const auto dir = temp_dir("corrupt");
  write_embedding_set(small_set(), dir);
  atomic_write_file(dir / "labels.bin", std::string("\x01", 1));
  CHECK_THROWS_AS(read_embedding_set(dir), CorruptionError);

  write_embedding_set(small_set(), dir);
  atomic_write_file(dir / "embeddings.bin", std::string(20, '\0'));
  CHECK_THROWS_AS(read_embedding_set(dir), CorruptionError);

  write_embedding_set(small_set(), dir);
  auto meta = nlohmann::json::parse(read_file(dir / "meta.json"));
  meta["format_version"] = 99;
  atomic_write_file(dir / "meta.json", meta.dump());
  CHECK_THROWS_AS(read_embedding_set(dir), VersionError);

  write_embedding_set(small_set(), dir);
  std::filesystem::remove(dir / "statements.jsonl");
  CHECK_THROWS_AS(read_embedding_set(dir), DataError);
}

TEST_CASE("embedding store: unknown meta keys survive") {
  const auto dir = temp_dir("extra");
  EmbeddingMeta m = small_set().meta();
  m.extra["source_precision"] = "bf16";
  m.extra["skipped"] = nlohmann::json::array({3, 9});
  m.layer_index = 16;
  m.prompt_template_id = "T10";
  const auto base = small_set();
  EmbeddingSet s(m, std::vector<float>(base.vectors().begin(), base.vectors().end()),
                 std::vector<std::uint8_t>(base.labels().begin(), base.labels().end()), base.statements());
  write_embedding_set(s, dir);
  const auto r = read_embedding_set(dir);
  CHECK(r.meta() == m);
  CHECK(r.meta().extra["source_precision"] == "bf16");
}

TEST_CASE("embedding set: constructor invariants") {
  CHECK_THROWS_AS(make_set({1, 2, 3}, {1, 0}, 2), CorruptionError);
  CHECK_THROWS_AS(make_set({1, 2, 3, 4}, {1, 2}, 2), DataError);
  CHECK_THROWS_AS(make_set({1, std::numeric_limits<float>::quiet_NaN(), 3, 4}, {1, 0}, 2), DataError);
  CHECK_THROWS_AS(make_set({1, std::numeric_limits<float>::infinity(), 3, 4}, {1, 0}, 2), DataError);
}

TEST_CASE("embedding set: slice, select, concat") {
  const auto s = make_set({0, 0, 1, 1, 2, 2, 3, 3}, {1, 0, 1, 0}, 2, "s");
  const auto sl = s.slice(1, 2);
  CHECK(sl.count() == 2);
  CHECK(sl.row(0)[0] == 1.0f);
  CHECK(sl.statements()[0].idx == 0);
  const std::size_t rows[] = {3, 0};
  const auto se = s.select(rows);
  CHECK(se.row(0)[0] == 3.0f);
  CHECK(se.labels()[0] == 0);
  const EmbeddingSet parts[] = {s, sl};
  const auto c = concat_sets(parts, "both");
  CHECK(c.count() == 6);
  CHECK(c.id() == "both");
  CHECK(c.statements()[5].idx == 5);
  const EmbeddingSet bad[] = {s, make_set({1, 2, 3}, {1}, 3)};
  CHECK_THROWS_AS(concat_sets(bad, "x"), DataError);
}
