#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <thread>

#include <json.hpp>

#include "coldrec/error.hpp"
#include "coldrec/model.hpp"
#include "coldrec/prompt.hpp"
#include "test_util.hpp"

namespace coldrec::model {
namespace {

const std::vector<std::string> kWords{"Star",  "Night", "River", "Echo",  "Paper", "Moon",   "Glass", "Iron",
                                      "Road",  "Café",  "Blue",  "Heart", "Storm", "Garden", "Ghost", "City",
                                      "Tiger", "Dream", "Silent", "Gold", "Winter", "Song",  "Fire",  "Light"};

std::string random_title(std::mt19937_64& rng) {
  std::string t;
  const std::size_t words = 1 + rng() % 4;
  for (std::size_t w = 0; w < words; ++w) t += (w ? " " : "") + kWords[rng() % kWords.size()];
  switch (rng() % 5) {
    case 0: t += " (" + std::to_string(1950 + rng() % 70) + ")"; break;
    case 1: t += ": Part " + std::to_string(1 + rng() % 3); break;
    case 2: t = "The " + t + ", Vol. " + std::to_string(1 + rng() % 9); break;
    default: break;
  }
  return t;
}

// Catalog of `n` titles that stay distinct after normalisation.
corpus::Catalog random_catalog(std::mt19937_64& rng, std::size_t n) {
  corpus::Catalog c;
  std::set<std::string> keys;
  while (c.size() < n) {
    std::string t = random_title(rng);
    if (!keys.insert(normalize_title(t)).second || !keys.insert(normalize_title(strip_trailing_year(t))).second) {
      continue;
    }
    c.add({"item" + std::to_string(c.size()), t, {}});
  }
  return c;
}

std::vector<std::string> oracle_vote(const std::vector<std::vector<std::string>>& rankings, std::size_t top_n) {
  struct S {
    std::size_t freq = 0, best = 1000, first = 1000000;
  };
  std::map<std::string, S> s;
  std::size_t occ = 0;
  for (const auto& r : rankings) {
    for (std::size_t i = 0; i < r.size(); ++i, ++occ) {
      auto& e = s[r[i]];
      ++e.freq;
      e.best = std::min(e.best, i + 1);
      e.first = std::min(e.first, occ);
    }
  }
  std::vector<std::pair<std::string, S>> v(s.begin(), s.end());
  // brute force: repeatedly extract the best remaining candidate
  std::vector<std::string> out;
  while (out.size() < top_n && !v.empty()) {
    auto best = v.begin();
    for (auto it = v.begin(); it != v.end(); ++it) {
      const auto& a = it->second;
      const auto& b = best->second;
      if (std::tuple(-static_cast<long>(a.freq), a.best, a.first) <
          std::tuple(-static_cast<long>(b.freq), b.best, b.first))
        best = it;
    }
    out.push_back(best->first);
    v.erase(best);
  }
  return out;
}

TEST(Mock, MatchesBruteForceVote) {
  std::mt19937_64 rng(5);
  const auto catalog = random_catalog(rng, 40);
  for (int trial = 0; trial < 500; ++trial) {
    SupportSet support;
    std::vector<std::vector<std::string>> rankings(1 + rng() % 8);
    for (std::size_t u = 0; u < rankings.size(); ++u) {
      auto& r = rankings[u];
      while (r.size() < 1 + rng() % 5) {
        const auto& t = catalog.items()[rng() % 12].title;  // small vocabulary forces overlaps
        if (std::find(r.begin(), r.end(), t) == r.end()) r.push_back(t);
      }
      support.exemplars.push_back({"u" + std::to_string(u), exemplar_label(u), r, 0.0});
    }
    const auto prompt = prompt::render_prompt(prompt::PromptTemplate{}, support, "User Z: Age 3.", 100000);
    ASSERT_EQ(extract_exemplar_rankings(prompt.text), rankings);
    const auto expected = oracle_vote(rankings, 5);
    std::string want;
    for (std::size_t i = 0; i < expected.size(); ++i) want += std::to_string(i + 1) + ") " + expected[i] + "\n";
    EXPECT_EQ(mock_generate(prompt.text, 5), want) << "trial " << trial;
  }
}

TEST(Mock, NoExemplarsMeansNoRecommendation) {
  const auto z = prompt::zero_shot_prompt(prompt::PromptTemplate{}, "User Z: Age 3.");
  EXPECT_EQ(mock_generate(z.text, 5), kNoRecommendation);
}

TEST(Mock, NoiseIsDeterministicAndChangesOutput) {
  SupportSet support;
  for (int u = 0; u < 6; ++u) support.exemplars.push_back({"u", exemplar_label(u), {"A", "B", "C", "D", "E"}, 0});
  const auto p = prompt::render_prompt(prompt::PromptTemplate{}, support, "User Z: Age 3.", 100000).text;
  MockNoise noise{0.6, 0.5, 9, {"X1", "X2", "X3", "X4", "X5", "X6", "X7"}};
  EXPECT_EQ(mock_generate(p, 5, noise), mock_generate(p, 5, noise));
  EXPECT_NE(mock_generate(p, 5, noise), mock_generate(p, 5));
  MockAdapter adapter(noise);
  ModelRequest req;
  req.prompt_text = p;
  EXPECT_EQ(adapter.generate(req).raw_text, mock_generate(p, 5, noise));
  EXPECT_EQ(adapter.calls(), 1u);
}

TEST(Mock, ConcurrentCallsAreCounted) {
  MockAdapter adapter;
  ModelRequest req;
  req.prompt_text = "User A: 1) X.\n";
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&] {
      for (int i = 0; i < 50; ++i) EXPECT_EQ(adapter.generate(req).raw_text, "1) X\n");
    });
  for (auto& t : threads) t.join();
  EXPECT_EQ(adapter.calls(), 200u);
}

TEST(Request, ValidationAndBody) {
  ModelRequest r;
  EXPECT_THROW(r.validate(), InputError);
  r.prompt_text = "hi";
  r.model_id = "m";
  r.seed = 4;
  const auto body = nlohmann::json::parse(chat_request_body(r));
  EXPECT_EQ(body["model"], "m");
  EXPECT_EQ(body["messages"][0]["role"], "user");
  EXPECT_EQ(body["messages"][0]["content"], "hi");
  EXPECT_EQ(body["max_tokens"], 256);
  EXPECT_EQ(body["seed"], 4);
  r.temperature = -1;
  EXPECT_THROW(r.validate(), InputError);
}

TEST(Titles, NormalizeAndYear) {
  EXPECT_EQ(normalize_title("  The MATRIX: Reloaded!! "), "the matrix reloaded");
  EXPECT_EQ(strip_trailing_year("Toy Story (1995)"), "Toy Story");
  EXPECT_EQ(strip_trailing_year("Toy Story (Pixar)"), "Toy Story (Pixar)");
  EXPECT_EQ(strip_trailing_year("1995"), "1995");
}

TEST(Titles, IndexResolutionOrder) {
  corpus::Catalog c;
  c.add({"1", "Toy Story (1995)", {}});
  c.add({"2", "Heat (1995)", {}});
  c.add({"3", "Heat", {}});
  const TitleIndex idx(c);
  EXPECT_EQ(idx.resolve("Toy Story (1995)")->second, MatchKind::exact);
  EXPECT_EQ(idx.resolve("toy story (1995)")->first, "1");
  EXPECT_EQ(idx.resolve("Toy Story")->first, "1");
  EXPECT_EQ(idx.resolve("Toy Story")->second, MatchKind::normalized);
  EXPECT_EQ(idx.resolve("Heat")->first, "3");  // exact beats the year-less alias
  EXPECT_FALSE(idx.resolve("Jaws"));
  EXPECT_FALSE(idx.resolve("   "));
}

TEST(Parse, AcceptedStylesAndCleanup) {
  corpus::Catalog c;
  c.add({"1", "Kindle", {}});
  c.add({"2", "Echo Dot", {}});
  c.add({"3", "Fire TV, 4K", {}});
  const TitleIndex idx(c);

  auto titles = [&](std::string_view raw) {
    std::vector<std::string> out;
    for (const auto& e : parse_ranked_list(raw, idx).first.entries) out.push_back(e.item_id.value_or("?" + e.raw_title));
    return out;
  };
  EXPECT_EQ(titles("1) Kindle\n2) Echo Dot"), (std::vector<std::string>{"1", "2"}));
  EXPECT_EQ(titles("1. Kindle\n2. Echo Dot\n"), (std::vector<std::string>{"1", "2"}));
  EXPECT_EQ(titles("- Kindle\n* Echo Dot"), (std::vector<std::string>{"1", "2"}));
  EXPECT_EQ(titles("1) Kindle, 2) Fire TV, 4K, 3) Echo Dot."), (std::vector<std::string>{"1", "3", "2"}));
  EXPECT_EQ(titles("Here you go: 1) Echo Dot, 2) Kindle"), (std::vector<std::string>{"2", "1"}));
  EXPECT_EQ(titles("1. **Kindle** - a great reader\n2. \"Echo Dot\""), (std::vector<std::string>{"1", "2"}));
  EXPECT_EQ(titles("Sure! Here are some picks.\n\n1) Mystery Box\n2) Kindle"),
            (std::vector<std::string>{"?Mystery Box", "1"}));
}

TEST(Parse, ReportCounts) {
  corpus::Catalog c;
  c.add({"1", "Kindle", {}});
  const TitleIndex idx(c);
  const auto [list, report] = parse_ranked_list("intro\n1) Kindle\n2) kindle\n3) Unknown", idx);
  EXPECT_EQ(report.lines_seen, 4u);
  EXPECT_EQ(report.entries_parsed, 3u);
  EXPECT_EQ(report.duplicates_dropped, 1u);
  EXPECT_EQ(report.unmatched_count, 1u);
  ASSERT_EQ(list.entries.size(), 2u);
  EXPECT_EQ(list.entries[1].rank, 2);
  EXPECT_EQ(list.entries[1].match_kind, MatchKind::unmatched);
  EXPECT_TRUE(parse_ranked_list(kNoRecommendation, idx).first.empty());
}

std::string render_style(const std::vector<std::string>& titles, int style) {
  std::string out;
  for (std::size_t i = 0; i < titles.size(); ++i) {
    switch (style) {
      case 0: out += std::to_string(i + 1) + ") " + titles[i] + "\n"; break;
      case 1: out += std::to_string(i + 1) + ". " + titles[i] + "\n"; break;
      default: out += "- " + titles[i] + "\n"; break;
    }
  }
  return out;
}

TEST(Parse, RoundTripsRandomLists) {
  std::mt19937_64 rng(21);
  const auto catalog = random_catalog(rng, 300);
  const TitleIndex idx(catalog);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> titles;
    std::vector<std::string> ids;
    const std::size_t n = 1 + rng() % 10;
    while (titles.size() < n) {
      const auto& item = catalog.items()[rng() % catalog.size()];
      if (std::find(ids.begin(), ids.end(), item.item_id) != ids.end()) continue;
      titles.push_back(item.title);
      ids.push_back(item.item_id);
    }
    for (int style = 0; style < 3; ++style) {
      const auto [list, report] = parse_ranked_list(render_style(titles, style), idx);
      std::vector<std::string> got;
      for (const auto& e : list.entries) got.push_back(e.item_id.value_or(""));
      ASSERT_EQ(got, ids) << "style " << style << "\n" << render_style(titles, style);
      EXPECT_EQ(report.unmatched_count, 0u);
    }
  }
}

TEST(Parse, FuzzNeverThrows) {
  std::mt19937_64 rng(99);
  corpus::Catalog c;
  c.add({"1", "Kindle", {}});
  const TitleIndex idx(c);
  const std::string pieces[] = {"1)", "2)", "1.", "- ", "* ", ", ", "\n", "Kindle", "**", "\"", " - ", ": ",
                                "999999999999)", "\xff", "\xc3", "(1999)", " ", "`", "\r\n", "0) "};
  for (int i = 0; i < 10000; ++i) {
    std::string s;
    const std::size_t n = rng() % 30;
    for (std::size_t j = 0; j < n; ++j) {
      if (rng() % 4 == 0) s.push_back(static_cast<char>(rng() % 256));
      else s += pieces[rng() % std::size(pieces)];
    }
    try {
      const auto parsed = parse_ranked_list(s, idx);
      EXPECT_LE(parsed.first.entries.size(), parsed.second.entries_parsed);
      for (std::size_t r = 0; r < parsed.first.entries.size(); ++r)
        EXPECT_EQ(parsed.first.entries[r].rank, static_cast<int>(r + 1));
    } catch (const std::exception& e) {
      ADD_FAILURE() << "threw on input " << i << ": " << e.what();
    }
  }
}

TEST(TranscriptCache, KeyedByModelAndPrompt) {
  testing::TempDir dir;
  TranscriptCache cache(dir.path());
  EXPECT_FALSE(cache.lookup("m", "p"));
  cache.store("m", "p", "1) A\n");
  EXPECT_EQ(cache.lookup("m", "p"), "1) A\n");
  EXPECT_FALSE(cache.lookup("m2", "p"));
  EXPECT_FALSE(cache.lookup("m", "p "));
  EXPECT_NE(cache.path_for("m", "p"), cache.path_for("mp", ""));
}

}  // namespace
}  // namespace coldrec::model
