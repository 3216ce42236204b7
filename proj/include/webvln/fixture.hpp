#pragma once

#include <string>

namespace webvln {

struct FixtureSite {
  std::string site_dir;  // ingestable with load_site
  std::string mock_dir;  // canned QA-generation responses for MockLlmClient
  std::size_t pages = 0;
};

// Writes a deterministic 30-page clothing shop (HTML, PNG screenshots and
// button images, captions, stoplist, site.json) plus LLM mock responses.
FixtureSite write_fixture_site(const std::string& dir);

}  // namespace webvln
