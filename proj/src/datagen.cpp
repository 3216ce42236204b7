#include "webvln/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <regex>
#include <set>

#include "webvln/error.hpp"
#include "webvln/rng.hpp"

namespace webvln {

std::vector<SampledPath> sample_paths(const NavGraph& graph, std::size_t n, std::uint64_t seed) {
  if (n == 0) fail(ErrorCode::kInvalidArgument, "InvalidArgument", "n must be at least 1");
  std::vector<PageId> eligible;
  for (const auto& [page, d] : bfs_distances(graph, graph.homepage_id())) {
    if (d >= kMinTransitions) eligible.push_back(page);
  }
  if (eligible.empty()) {
    fail(ErrorCode::kNotFound, "NotEnoughTargets", "no page is at least 2 transitions from the homepage");
  }
  Rng rng(seed);
  shuffle_in_place(eligible, rng);
  eligible.resize(std::min(n, eligible.size()));

  std::vector<SampledPath> out;
  for (const auto& target : eligible) {
    out.push_back({*shortest_path(graph, graph.homepage_id(), target), target});
  }
  return out;
}

const std::vector<std::string>& default_rules() {
  static const std::vector<std::string> kRules = {
      "Provide 3 questions and their answers that can be directly found from the information provided in the text.",
      "Ask the first question about price and second about available sizes and the third about material.",
      "If precise answers cannot be found for those questions, then ask the questions on colours and availability in "
      "stock.",
      "Phrase your questions in a clear and concise manner to ensure they can be accurately answered by the given "
      "content.",
      "Answer should be to the point without additional information.",
      "The provided text is all from an online shopping website, there is some disturbing information which is "
      "irrelevant to the products, such as \"sign in\". Make sure your questions and answers will focus on the "
      "products themselves.",
      "The provided texts may contain punctuation and symbols, which are irrelevant to the products, you should be "
      "able to distinguish them and make sure they won’t appear in the generated questions and answers.",
  };
  return kRules;
}

std::string build_prompt(const std::string& caption, const std::vector<std::string>& words,
                         const std::vector<std::string>& rules) {
  if (rules.empty()) fail(ErrorCode::kInvalidArgument, "InvalidArgument", "rules must not be empty");
  std::string p;
  p += "There is a picture of the product with the caption of";
  p += '\n';
  p += caption;
  p += '\n';
  p += "After that, here are all the words that appear on the website:";
  p += '\n';
  p += join(words, " ");
  p += '\n';
  p += "Lastly, I will give the following instructions, and you will be strictly following the instructions:";
  p += '\n';
  p += join(rules, "\n");
  return p;
}

namespace {

std::string strip_field(std::string s) {
  // "1. Q: ..." layouts leave the next item's number at the end of the
  // previous answer, on a line of its own.
  static const std::regex kTrailingNumber(R"((?:^|\n)[ \t]*\d+[.)][ \t]*$)");
  s = trim(s);
  s = std::regex_replace(s, kTrailingNumber, "");
  s = trim(s);
  while (s.size() >= 2) {
    const char f = s.front(), b = s.back();
    if ((f == '"' && b == '"') || (f == '\'' && b == '\'')) {
      s = trim(s.substr(1, s.size() - 2));
    } else {
      break;
    }
  }
  if (s.size() >= 6 && s.rfind("\xE2\x80\x9C", 0) == 0 && s.compare(s.size() - 3, 3, "\xE2\x80\x9D") == 0) {
    s = trim(s.substr(3, s.size() - 6));
  }
  return s;
}

}  // namespace

std::vector<QAPair> parse_qa_response(const std::string& llm_output, const PageId& source_page_id) {
  static const std::regex kMarker(R"(\b(q|question|a|answer)\s*(\d+)?\s*[:.)])", std::regex::icase);

  struct Mark {
    bool question;
    std::size_t begin;  // start of marker
    std::size_t content;
  };
  std::vector<Mark> marks;
  for (auto it = std::sregex_iterator(llm_output.begin(), llm_output.end(), kMarker); it != std::sregex_iterator();
       ++it) {
    const auto& m = *it;
    const char k = static_cast<char>(std::tolower(static_cast<unsigned char>(m.str(1)[0])));
    // "A." would otherwise match inside prose; only ':' is accepted without a number.
    const char sep = m.str(0).back();
    if (!m[2].matched && sep != ':') continue;
    marks.push_back({k == 'q', static_cast<std::size_t>(m.position(0)),
                     static_cast<std::size_t>(m.position(0) + m.length(0))});
  }

  std::vector<QAPair> pairs;
  for (std::size_t i = 0; i + 1 < marks.size(); ++i) {
    if (!marks[i].question || marks[i + 1].question) continue;
    const std::size_t a_end = i + 2 < marks.size() ? marks[i + 2].begin : llm_output.size();
    QAPair p;
    p.question = strip_field(llm_output.substr(marks[i].content, marks[i + 1].begin - marks[i].content));
    p.answer = strip_field(llm_output.substr(marks[i + 1].content, a_end - marks[i + 1].content));
    p.source_page_id = source_page_id;
    if (!p.question.empty() && !p.answer.empty()) pairs.push_back(std::move(p));
    ++i;
  }
  if (pairs.empty()) fail(ErrorCode::kParse, "UnparsableResponse", "no question/answer pairs found");
  return pairs;
}

void assign_splits(std::vector<EpisodeRecord>& records, std::uint64_t seed, SplitFractions fractions) {
  // Group record indices by path.
  std::map<std::vector<PageId>, std::vector<std::size_t>> by_path;
  for (std::size_t i = 0; i < records.size(); ++i) by_path[records[i].path].push_back(i);
  std::vector<std::vector<std::size_t>> groups;
  for (auto& [path, idx] : by_path) groups.push_back(std::move(idx));
  Rng rng(seed);
  shuffle_in_place(groups, rng);

  const double total = fractions.train + fractions.val + fractions.test;
  const auto n = static_cast<double>(records.size());
  std::vector<bool> used(groups.size(), false);

  // Subset-sum over unused groups, choosing the reachable size closest to target.
  auto pick = [&](double target) {
    std::vector<char> reach(static_cast<std::size_t>(2.5 * target) + 5, 0);
    const std::size_t cap = reach.size() - 1;
    std::vector<std::size_t> via(reach.size(), 0);
    reach[0] = 1;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (used[g]) continue;
      const std::size_t sz = groups[g].size();
      for (std::size_t s = cap; s >= sz && s > 0; --s) {
        if (!reach[s] && reach[s - sz]) {
          reach[s] = 1;
          via[s] = g;
        }
      }
    }
    std::size_t best = 0;
    for (std::size_t s = 0; s <= cap; ++s) {
      if (!reach[s]) continue;
      const auto diff = [&](std::size_t x) { return std::fabs(static_cast<double>(x) - target); };
      if (diff(s) < diff(best)) best = s;
    }
    std::vector<std::size_t> chosen;
    for (std::size_t s = best; s > 0;) {
      const std::size_t g = via[s];
      chosen.push_back(g);
      s -= groups[g].size();
    }
    return chosen;
  };

  const auto label = [&](const std::vector<std::size_t>& gs, const char* name) {
    for (std::size_t g : gs) {
      used[g] = true;
      for (std::size_t r : groups[g]) records[r].split = name;
    }
  };
  label(pick(n * fractions.val / total), "val");
  label(pick(n * fractions.test / total), "test");
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (!used[g]) label({g}, "train");
  }
}

std::vector<EpisodeRecord> generate_records(const NavGraph& graph, const std::vector<SampledPath>& paths,
                                            LlmClient& llm, Captioner* captioner, const GenerationOptions& options,
                                            GenerationReport* report) {
  GenerationReport local;
  GenerationReport& rep = report ? *report : local;

  struct Draft {
    EpisodeRecord record;
    std::string caption;
  };
  std::vector<Draft> drafts;

  for (const auto& sp : paths) {
    const WebPage& page = graph.page(sp.target_page_id);
    std::string caption;
    if (!page.captions.empty()) {
      caption = page.captions.front();
    } else if (captioner && !page.screenshot_ref.empty()) {
      try {
        caption = captioner->caption(graph.resolve_path(page.screenshot_ref));
      } catch (const Error& e) {
        rep.skipped.push_back(page.page_id + ": captioner failed (" + e.what() + "); continuing without caption");
      }
    }
    const std::string prompt = build_prompt(caption, page.word_list, options.rules);
    std::vector<QAPair> pairs;
    try {
      ++rep.prompts_sent;
      pairs = parse_qa_response(llm.complete(prompt), page.page_id);
    } catch (const Error& e) {
      rep.skipped.push_back(page.page_id + ": " + e.what());
      continue;
    }
    std::size_t k = 0;
    for (const auto& qa : pairs) {
      ++k;
      const auto toks = tokenize(qa.answer);
      if (clean_text(toks, options.stoplist).size() != toks.size()) {
        rep.skipped.push_back(page.page_id + ": answer '" + qa.answer + "' contains boilerplate; pair dropped");
        continue;
      }
      Draft d;
      d.caption = caption;
      d.record.record_id = (graph.site_id().empty() ? std::string("site") : graph.site_id()) + "-" + page.page_id +
                           "-q" + std::to_string(k);
      d.record.site_id = graph.site_id();
      d.record.question = qa.question;
      d.record.answer = qa.answer;
      d.record.path = sp.path;
      drafts.push_back(std::move(d));
    }
  }

  // A question asked about more than one target cannot locate its page alone.
  std::map<std::string, std::set<PageId>> targets_by_question;
  for (const auto& d : drafts) targets_by_question[join(tokenize(d.record.question), " ")].insert(d.record.target_page_id());

  std::vector<EpisodeRecord> records;
  for (auto& d : drafts) {
    if (targets_by_question[join(tokenize(d.record.question), " ")].size() > 1) {
      d.record.description = d.caption;
      if (d.caption.empty()) rep.skipped.push_back(d.record.record_id + ": ambiguous question but no caption for D");
    }
    validate_record(d.record, graph);
    records.push_back(std::move(d.record));
  }
  assign_splits(records, options.seed, options.fractions);
  return records;
}

std::vector<EpisodeRecord> quality_sample(const std::vector<EpisodeRecord>& records, std::size_t k, std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> by_site;
  for (std::size_t i = 0; i < records.size(); ++i) by_site[records[i].site_id].push_back(i);
  Rng rng(seed);
  std::vector<EpisodeRecord> out;
  for (auto& [site, idx] : by_site) {
    shuffle_in_place(idx, rng);
    idx.resize(std::min(k, idx.size()));
    std::sort(idx.begin(), idx.end());
    for (std::size_t i : idx) out.push_back(records[i]);
  }
  return out;
}

}  // namespace webvln
