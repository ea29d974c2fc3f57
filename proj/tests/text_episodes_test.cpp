#include <doctest.h>

#include <algorithm>
#include <breadsim/text_episodes.hpp>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace breadsim;

namespace {

std::vector<std::string> load_corpus() {
  const std::filesystem::path dir =
      std::filesystem::path(BREADSIM_FIXTURE_DIR) / "corpus";
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.path().extension() == ".txt") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<std::string> docs;
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    docs.push_back(buffer.str());
  }
  return docs;
}

std::string joined(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += p;
  return out;
}

}  // namespace

TEST_CASE("separators attach to the span they terminate") {
  const auto spans = split_steps("A. B. C.", {". "});
  CHECK(spans == std::vector<std::string>{"A. ", "B. ", "C."});

  const auto whole = split_steps("no separator here", {". "});
  CHECK(whole == std::vector<std::string>{"no separator here"});

  const auto paragraphs = split_steps("P1\n\nP2\n\nP3", {"\n\n"});
  CHECK(paragraphs == std::vector<std::string>{"P1\n\n", "P2\n\n", "P3"});

  // A trailing separator leaves no empty remainder behind.
  const auto trailing = split_steps("A. B. ", {". "});
  CHECK(trailing == std::vector<std::string>{"A. ", "B. "});

  // Consecutive separators yield separator-only spans, still lossless.
  const auto doubled = split_steps("A. . B.", {". "});
  CHECK(doubled == std::vector<std::string>{"A. ", ". ", "B."});
}

TEST_CASE("longest separator wins at a shared position") {
  const auto spans = split_steps("x\n\ny\nz", {"\n", "\n\n"});
  CHECK(spans == std::vector<std::string>{"x\n\n", "y\n", "z"});
}

TEST_CASE("split input validation") {
  CHECK_THROWS_AS(split_steps("abc", {}), ConfigInvalid);
  CHECK_THROWS_AS(split_steps("abc", {". ", ""}), ConfigInvalid);
  CHECK(split_steps("", {". "}).empty());
}

TEST_CASE("aggregation balances episode sizes with larger groups first") {
  const auto five = aggregate_episodes({"a", "b", "c", "d", "e"}, 2);
  REQUIRE(five.episode_count() == 2);
  CHECK(five.episode_begin == std::vector<std::size_t>{0, 3, 5});

  const auto few = aggregate_episodes({"a", "b", "c"}, 10);
  CHECK(few.episode_count() == 3);

  const auto exact = aggregate_episodes(std::vector<std::string>(10, "s"), 10);
  CHECK(exact.episode_count() == 10);

  CHECK_THROWS_AS(aggregate_episodes({}, 3), EmptyInput);
  CHECK_THROWS_AS(aggregate_episodes({"a"}, 0), ConfigInvalid);
}

TEST_CASE("prefix hints are byte-exact concatenations") {
  const auto split = aggregate_episodes(split_steps("A. B. C.", {". "}), 3);
  CHECK(prefix_hint(split, 0) == "");
  CHECK(prefix_hint(split, 2) == "A. B. ");
  CHECK(prefix_hint(split, 3) == "A. B. C.");
  CHECK_THROWS_AS(prefix_hint(split, 4), OutOfRange);
  CHECK_THROWS_AS(prefix_hint(split, -1), OutOfRange);
}

TEST_CASE("corpus round trip is lossless and balanced") {
  const auto docs = load_corpus();
  REQUIRE(docs.size() >= 20);
  const std::vector<std::vector<std::string>> separator_sets{
      {". ", "\n"}, {"\n\n"}, {". "}};
  for (const auto& doc : docs) {
    for (const auto& separators : separator_sets) {
      const auto steps = split_steps(doc, separators);
      if (steps.empty()) continue;  // only possible for empty docs
      CHECK(joined(steps) == doc);

      const auto split = aggregate_episodes(steps, 10);
      CHECK(prefix_hint(split, split.episode_count()) == doc);

      std::size_t smallest = steps.size(), largest = 0;
      for (int e = 0; e < split.episode_count(); ++e) {
        const std::size_t size = split.episode_begin[static_cast<std::size_t>(e) + 1] -
                                 split.episode_begin[static_cast<std::size_t>(e)];
        smallest = std::min(smallest, size);
        largest = std::max(largest, size);
      }
      CHECK(largest - smallest <= 1);
    }
  }
}

TEST_CASE("splitting is idempotent on its own spans") {
  const auto docs = load_corpus();
  const std::vector<std::string> separators{". ", "\n"};
  for (const auto& doc : docs) {
    for (const auto& span : split_steps(doc, separators)) {
      const auto again = split_steps(span, separators);
      REQUIRE(again.size() == 1);
      CHECK(again.front() == span);
    }
  }
}
