#include "xml.hpp"

#include <expat.h>

namespace branchdrift::xml {

const Node* Node::child(std::string_view child_name) const {
  for (const auto& c : children)
    if (c->name == child_name) return c.get();
  return nullptr;
}

std::vector<const Node*> Node::children_named(std::string_view child_name) const {
  std::vector<const Node*> out;
  for (const auto& c : children)
    if (c->name == child_name) out.push_back(c.get());
  return out;
}

namespace {

struct Builder {
  XML_Parser parser;
  std::unique_ptr<Node> root;
  std::vector<Node*> stack;
};

std::string local_name(const char* qualified) {
  std::string_view q(qualified);
  auto colon = q.rfind(':');
  return std::string(colon == std::string_view::npos ? q : q.substr(colon + 1));
}

void on_start(void* user, const XML_Char* name, const XML_Char** attrs) {
  auto* b = static_cast<Builder*>(user);
  auto node = std::make_unique<Node>();
  node->name = local_name(name);
  node->line = static_cast<long>(XML_GetCurrentLineNumber(b->parser));
  node->column = static_cast<long>(XML_GetCurrentColumnNumber(b->parser)) + 1;
  for (int i = 0; attrs[i]; i += 2) node->attrs.emplace(attrs[i], attrs[i + 1]);
  Node* raw = node.get();
  if (b->stack.empty()) {
    b->root = std::move(node);
  } else {
    b->stack.back()->children.push_back(std::move(node));
  }
  b->stack.push_back(raw);
}

void on_end(void* user, const XML_Char*) {
  static_cast<Builder*>(user)->stack.pop_back();
}

void on_text(void* user, const XML_Char* s, int len) {
  auto* b = static_cast<Builder*>(user);
  if (!b->stack.empty()) b->stack.back()->text.append(s, static_cast<std::size_t>(len));
}

}  // namespace

std::unique_ptr<Node> parse(std::string_view document) {
  Builder b;
  b.parser = XML_ParserCreate(nullptr);
  if (!b.parser) throw std::bad_alloc();
  struct Guard {
    XML_Parser p;
    ~Guard() { XML_ParserFree(p); }
  } guard{b.parser};

  XML_SetUserData(b.parser, &b);
  XML_SetElementHandler(b.parser, on_start, on_end);
  XML_SetCharacterDataHandler(b.parser, on_text);

  // expat takes int lengths; feed in chunks.
  constexpr std::size_t chunk = 1 << 20;
  std::size_t offset = 0;
  do {
    std::size_t len = std::min(chunk, document.size() - offset);
    bool last = offset + len == document.size();
    if (XML_Parse(b.parser, document.data() + offset, static_cast<int>(len), last) ==
        XML_STATUS_ERROR) {
      throw ParseError(XML_ErrorString(XML_GetErrorCode(b.parser)),
                       static_cast<long>(XML_GetCurrentLineNumber(b.parser)),
                       static_cast<long>(XML_GetCurrentColumnNumber(b.parser)) + 1);
    }
    offset += len;
  } while (offset < document.size());
  if (!b.root) throw ParseError("no element found", 1, 1);
  return std::move(b.root);
}

std::string escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace branchdrift::xml
