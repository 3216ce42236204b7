#include "webvln/fixture.hpp"

#include <filesystem>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "webvln/image.hpp"
#include "webvln/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace webvln {
namespace {

struct Product {
  std::string id;
  std::string name;
  int price;
  std::string sizes;
  std::string material;
};

struct Category {
  std::string id;
  std::string title;
  std::string parent;  // page linking back
  enum class Links { kText, kImageWithAlt, kImageOnly } links;
  std::vector<Product> products;
};

const std::vector<Category>& catalogue() {
  static const std::vector<Category> kCats = {
      {"socks", "Socks", "index", Category::Links::kText,
       {{"sock-red", "red wool socks", 12, "S M L", "wool"},
        {"sock-blue", "blue cotton socks", 9, "M L", "cotton"},
        {"sock-green", "green hiking socks", 15, "M L XL", "merino"},
        {"sock-black", "black dress socks", 11, "S M", "silk"},
        {"sock-yellow", "yellow ankle socks", 7, "S M L", "bamboo"},
        {"sock-striped", "striped knee socks", 13, "M", "acrylic"}}},
      {"hats", "Hats", "index", Category::Links::kImageWithAlt,
       {{"hat-straw", "straw sun hat", 25, "M L", "straw"},
        {"hat-beanie", "wool beanie", 18, "S M", "wool"},
        {"hat-cap", "baseball cap", 20, "L", "cotton"},
        {"hat-fedora", "felt fedora", 45, "M L", "felt"},
        {"hat-bucket", "bucket hat", 22, "S M L", "canvas"},
        {"hat-pom", "knit pom hat", 19, "M", "acrylic"}}},
      {"shirts-casual", "Casual shirts", "shirts", Category::Links::kText,
       {{"shirt-linen", "linen summer shirt", 35, "S M L", "linen"},
        {"shirt-flannel", "flannel check shirt", 40, "M L XL", "flannel"},
        {"shirt-denim", "denim work shirt", 42, "L XL", "denim"},
        {"shirt-polo", "striped polo shirt", 30, "S M", "pique"},
        {"shirt-tee", "graphic tee shirt", 15, "S M L XL", "jersey"}}},
      {"shirts-formal", "Formal shirts", "shirts", Category::Links::kImageOnly,
       {{"shirt-oxford", "white oxford shirt", 55, "M L", "oxford"},
        {"shirt-poplin", "blue poplin shirt", 60, "S M L", "poplin"},
        {"shirt-twill", "pink twill shirt", 58, "M", "twill"},
        {"shirt-satin", "black satin shirt", 70, "L", "satin"},
        {"shirt-herring", "grey herringbone shirt", 65, "M L XL", "tweed"}}},
  };
  return kCats;
}

// Deterministic colour per string.
std::array<std::uint8_t, 3> colour_of(const std::string& s) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : s) h = (h ^ c) * 16777619u;
  return {static_cast<std::uint8_t>(40 + h % 200), static_cast<std::uint8_t>(40 + (h >> 8) % 200),
          static_cast<std::uint8_t>(40 + (h >> 16) % 200)};
}

void fill_rect(Image& img, int x0, int y0, int x1, int y1, std::array<std::uint8_t, 3> c) {
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      for (int k = 0; k < 3; ++k) img.at(x, y, k) = c[static_cast<std::size_t>(k)];
}

Image product_image(const std::string& id) {
  Image img(56, 56, 245);
  fill_rect(img, 8, 8, 48, 48, colour_of(id));
  fill_rect(img, 8, 24, 48, 32, colour_of(id + "/stripe"));
  return img;
}

// Header band, a tile per outgoing link, and a page-specific accent block.
Image screenshot(const std::string& page_id, std::size_t links) {
  Image img(224, 224, 250);
  fill_rect(img, 0, 0, 224, 32, {30, 30, 60});
  fill_rect(img, 16, 48, 208, 96, colour_of(page_id));
  for (std::size_t i = 0; i < links && i < 8; ++i) {
    const int x = 16 + static_cast<int>(i % 4) * 50;
    const int y = 112 + static_cast<int>(i / 4) * 50;
    fill_rect(img, x, y, x + 40, y + 40, colour_of(page_id + "#" + std::to_string(i)));
  }
  return img;
}

std::string header() {
  return "<header><nav><a href=\"index.html\">Home</a> <a href=\"#top\">Skip to content</a> "
         "<a href=\"login.html\">Sign in</a> <a href=\"javascript:void(0)\">Cart</a></nav></header>\n";
}

std::string page(const std::string& title, const std::string& body) {
  return "<!DOCTYPE html>\n<html><head><title>" + title + "</title><style>body{font-family:sans-serif}</style>" +
         "</head>\n<body>\n" + header() + "<main>\n" + body + "</main>\n<footer><p>Privacy policy</p></footer>\n" +
         "<script>var cart = [];</script>\n</body></html>\n";
}

std::string caption_for(const Product& p) { return "a studio photo of the " + p.name; }

std::string qa_response(const Product& p) {
  std::ostringstream o;
  o << "Q1: What is the price of the " << p.name << "?\nA1: $" << p.price << "\n\n";
  o << "Q2: What sizes are available?\nA2: " << p.sizes << "\n\n";
  o << "Q3: What material is it made of?\nA3: " << p.material << "\n";
  return o.str();
}

}  // namespace

FixtureSite write_fixture_site(const std::string& dir) {
  const fs::path root(dir);
  fs::create_directories(root / "pages");
  fs::create_directories(root / "screenshots");
  fs::create_directories(root / "assets");
  fs::create_directories(root / "llm_mock");

  std::map<std::string, std::string> html;
  std::map<std::string, std::size_t> link_count;
  json captions = json::object();
  json mock_index = json::object();

  auto product_link = [](const Category& c, const Product& p) {
    const std::string img = "../assets/" + p.id + ".png";
    switch (c.links) {
      case Category::Links::kText:
        return "<li><a href=\"" + p.id + ".html\">" + p.name + "</a></li>\n";
      case Category::Links::kImageWithAlt:
        return "<li><a href=\"" + p.id + ".html\"><img src=\"" + img + "\" alt=\"" + p.name + "\"></a></li>\n";
      case Category::Links::kImageOnly:
        return "<li><a href=\"" + p.id + ".html\"><img src=\"" + img + "\"></a></li>\n";
    }
    return std::string();
  };

  const auto& cats = catalogue();
  const Product& sale_a = cats[0].products[2];
  const Product& sale_b = cats[1].products[3];

  html["index"] = page("Fixture Shop",
                       "<h1>Fixture Shop</h1>\n<p>Clothing and accessories for every season.</p>\n<ul>\n"
                       "<li><a href=\"socks.html\">Socks</a></li>\n<li><a href=\"hats.html\">Hats</a></li>\n"
                       "<li><a href=\"shirts.html\">Shirts</a></li>\n<li><a href=\"sale.html\">Sale</a></li>\n"
                       "<li><a href=\"about.html\">About us</a></li>\n"
                       "<li><a href=\"https://example.com/blog\">Our blog</a></li>\n"
                       "<li><a href=\"mailto:help@example.com\">Email us</a></li>\n</ul>\n");
  link_count["index"] = 5;

  html["about"] = "<!DOCTYPE html>\n<html><body><h1>About us</h1>\n"
                  "<p>We are a small family shop founded in 1998.</p>\n"
                  "<p>Our warehouse ships within two days.</p>\n</body></html>\n";
  link_count["about"] = 0;

  html["sale"] = page("Sale", "<h1>Sale</h1>\n<p>Limited time offers.</p>\n<ul>\n<li><a href=\"" + sale_a.id +
                                  ".html\">" + sale_a.name + " on sale</a></li>\n<li><a href=\"" + sale_b.id +
                                  ".html\">" + sale_b.name + " on sale</a></li>\n</ul>\n");
  link_count["sale"] = 3;

  html["shirts"] = page("Shirts", "<h1>Shirts</h1>\n<p>Casual and formal shirts.</p>\n<ul>\n"
                                  "<li><a href=\"shirts-casual.html\">Casual shirts</a></li>\n"
                                  "<li><a href=\"shirts-formal.html\">Formal shirts</a></li>\n</ul>\n");
  link_count["shirts"] = 3;

  for (const auto& c : cats) {
    std::string body = "<h1>" + c.title + "</h1>\n";
    const bool subcategory = c.parent != "index";
    if (subcategory) {
      const std::string banner = c.id + "-banner.png";
      body += "<img src=\"../assets/" + banner + "\" alt=\"\">\n";
      save_png(product_image(c.id), (root / "assets" / banner).string());
      const std::string cap = "a banner showing the " + to_lower(c.title) + " range";
      captions[banner] = cap;
      const std::string file = c.id + ".txt";
      write_file((root / "llm_mock" / file).string(),
                 "Q1: Which shirt range is shown on this page?\nA1: " + to_lower(c.title) + "\n");
      mock_index[cap] = file;
    }
    body += "<p>" + std::to_string(c.products.size()) + " products in this range.</p>\n<ul>\n";
    for (const auto& p : c.products) body += product_link(c, p);
    body += "</ul>\n";
    if (subcategory) body += "<p><a href=\"" + c.parent + ".html\">Back to shirts</a></p>\n";
    html[c.id] = page(c.title, body);
    link_count[c.id] = c.products.size() + 1 + (subcategory ? 1 : 0);

    for (const auto& p : c.products) {
      const std::string img = p.id + ".png";
      save_png(product_image(p.id), (root / "assets" / img).string());
      captions[img] = caption_for(p);
      std::ostringstream pb;
      pb << "<h1>" << p.name << "</h1>\n<img src=\"../assets/" << img << "\" alt=\"\">\n";
      pb << "<p>Price: $" << p.price << "</p>\n";
      pb << "<p>Sizes: " << p.sizes << "</p>\n";
      pb << "<p>Material: " << p.material << "</p>\n";
      pb << "<p><button>Add to cart</button></p>\n";
      pb << "<p><a href=\"" << c.id << ".html\">Back to " << to_lower(c.title) << "</a></p>\n";
      html[p.id] = page(p.name, pb.str());
      link_count[p.id] = 2;
      const std::string file = p.id + ".txt";
      write_file((root / "llm_mock" / file).string(), qa_response(p));
      mock_index[caption_for(p)] = file;
    }
  }

  for (const auto& [id, text] : html) {
    write_file((root / "pages" / (id + ".html")).string(), text);
    save_png(screenshot(id, link_count[id]), (root / "screenshots" / (id + ".png")).string());
  }
  write_file((root / "captions.json").string(), captions.dump(2) + "\n");
  write_file((root / "llm_mock" / "index.json").string(), mock_index.dump(2) + "\n");
  write_file((root / "stoplist.txt").string(),
             "# navigation chrome\nsign in\ncart\nadd to cart\nskip to content\nprivacy policy\nhome\n");
  write_file((root / "site.json").string(),
             json{{"site_id", "fixture-shop"}, {"homepage_id", "index"}, {"stoplist", "stoplist.txt"}}.dump(2) + "\n");

  return FixtureSite{root.string(), (root / "llm_mock").string(), html.size()};
}

}  // namespace webvln
