#include <doctest.h>

#include "helpers.hpp"
#include "webvln/error.hpp"
#include "webvln/html.hpp"
#include "webvln/text.hpp"

using namespace webvln;

TEST_SUITE("text") {
  TEST_CASE("clean_text drops stoplist words and keeps order") {
    const Stoplist stop(std::set<std::string>{"sign", "in"});
    CHECK(clean_text({"Sign", "in", "Socks", "$12"}, stop) == std::vector<std::string>{"socks", "$12"});
  }

  TEST_CASE("clean_text on empty input") { CHECK(clean_text({}, Stoplist{}).empty()); }

  TEST_CASE("punctuation-only tokens are removed one by one") {
    CHECK(clean_text({"!!!", "--", "Blanket"}, Stoplist{}) == std::vector<std::string>{"blanket"});
  }

  TEST_CASE("multi-word stoplist entries remove whole runs only") {
    const Stoplist stop(std::set<std::string>{"sign in", "cart"});
    CHECK(clean_text({"Sign", "in", "to", "sign", "up", "Cart"}, stop) ==
          std::vector<std::string>{"to", "sign", "up"});
  }

  TEST_CASE("raw words containing whitespace are split") {
    CHECK(clean_text({"Red  wool\nsocks"}, Stoplist{}) == std::vector<std::string>{"red", "wool", "socks"});
  }

  TEST_CASE("tokenize lowercases and keeps inner punctuation") {
    CHECK(tokenize("What is the PRICE? $12 !") == std::vector<std::string>{"what", "is", "the", "price?", "$12"});
  }

  TEST_CASE("stoplist file skips comments and blank lines") {
    const std::string dir = testutil::scratch("stoplist");
    write_file(dir + "/stop.txt", "# comment\n\nSign In\ncart\n");
    const Stoplist s = Stoplist::load(dir + "/stop.txt");
    CHECK(s.words() == std::set<std::string>{"cart"});
    REQUIRE(s.phrases().size() == 1);
    CHECK(s.phrases()[0] == std::vector<std::string>{"sign", "in"});
  }

  TEST_CASE("default stoplist contains the boilerplate seed terms") {
    const auto& e = default_stoplist_entries();
    CHECK(e.count("sign in") == 1);
    CHECK(e.count("cart") == 1);
    CHECK(e.count("menu") == 1);
  }

  TEST_CASE("string helpers") {
    CHECK(strip_edge_punctuation("(socks?)") == "socks");
    CHECK(strip_edge_punctuation("$12") == "12");
    CHECK(is_punctuation_only("?!"));
    CHECK_FALSE(is_punctuation_only(""));
    CHECK_FALSE(is_punctuation_only("a!"));
    CHECK(normalize_space("  a \n b\t") == "a b");
    CHECK(trim("\t x ") == "x");
    CHECK(join({"a", "b", "c"}, "-") == "a-b-c");
  }

  TEST_CASE("read_file on a missing path is an IO error") {
    try {
      (void)read_file("/nonexistent/webvln/file");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kIo);
    }
  }
}

TEST_SUITE("html") {
  TEST_CASE("void and self-closing tags do not nest") {
    auto root = html::parse("<p>a<br>b<img src='x.png'/>c</p>");
    REQUIRE(root->children.size() == 1);
    const auto& p = *root->children[0];
    CHECK(p.tag == "p");
    REQUIRE(p.children.size() == 5);
    CHECK(p.children[1]->tag == "br");
    CHECK(p.children[3]->tag == "img");
    CHECK(*p.children[3]->attr("src") == "x.png");
  }

  TEST_CASE("attributes: quoted, unquoted, bare and entity-decoded") {
    auto root = html::parse("<A HREF=p2.html Alt=\"Tom &amp; Jerry\" hidden>x</A>");
    const auto& a = *root->children[0];
    CHECK(a.tag == "a");
    CHECK(*a.attr("href") == "p2.html");
    CHECK(*a.attr("alt") == "Tom & Jerry");
    REQUIRE(a.attr("hidden") != nullptr);
    CHECK(a.attr("hidden")->empty());
    CHECK(a.attr("missing") == nullptr);
  }

  TEST_CASE("entities") {
    CHECK(html::decode_entities("&lt;b&gt; &#65;&#x42; &pound;5 &bogus; & x") == "<b> AB \xC2\xA3" "5 &bogus; & x");
  }

  TEST_CASE("script text is raw and excluded from inner text") {
    auto root = html::parse("<div>Hello <script>if (a < b) { x = '</div>'; }</script> world</div>");
    CHECK(html::inner_text(*root) == "Hello world");
  }

  TEST_CASE("stray end tags are ignored and unclosed tags tolerated") {
    auto root = html::parse("</span><div><p>one<p>two</div><b>three");
    CHECK(html::inner_text(*root) == "one two three");
  }

  TEST_CASE("text blocks follow block elements in document order") {
    auto root = html::parse("<html><head><title>T</title></head><body><h1>Socks</h1>"
                            "<p>Price: <b>$12</b></p><ul><li>S</li><li>M</li></ul></body></html>");
    CHECK(html::text_blocks(*root) == std::vector<std::string>{"Socks", "Price: $12", "S", "M"});
  }

  TEST_CASE("comments and doctype are skipped") {
    auto root = html::parse("<!DOCTYPE html><!-- <a href='x.html'>no</a> --><p>yes</p>");
    CHECK(html::inner_text(*root) == "yes");
  }

  TEST_CASE("hidden containers") {
    CHECK(html::is_hidden_container("script"));
    CHECK(html::is_hidden_container("style"));
    CHECK_FALSE(html::is_hidden_container("div"));
  }
}
