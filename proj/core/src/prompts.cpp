#include "dualloop/prompts.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "dualloop/types.hpp"
#include "embedded_data.hpp"

namespace dualloop {

PromptTemplates PromptTemplates::parse(std::string_view text) {
  PromptTemplates out;
  std::string current;
  std::string body;
  bool in_section = false;
  auto flush = [&] {
    if (!in_section) return;
    while (!body.empty() && body.back() == '\n') body.pop_back();
    out.sections_[current] = body;
    body.clear();
  };
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.size() >= 2 && line.front() == '[' && line.back() == ']') {
      flush();
      current = std::string(line.substr(1, line.size() - 2));
      if (out.sections_.contains(current)) {
        throw ConfigError(fmt::format("duplicate template section [{}]", current));
      }
      in_section = true;
      continue;
    }
    if (!in_section) {
      if (line.empty() || line.front() == '#') continue;
      throw ConfigError("template text before the first [section]");
    }
    body.append(line);
    body.push_back('\n');
  }
  flush();
  return out;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open template file '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const PromptTemplates& PromptTemplates::builtin() {
  static const PromptTemplates templates = parse(embedded::prompts_txt());
  return templates;
}

bool PromptTemplates::contains(std::string_view name) const {
  return sections_.find(name) != sections_.end();
}

const std::string& PromptTemplates::get(std::string_view name) const {
  const auto it = sections_.find(name);
  if (it == sections_.end()) throw ConfigError(fmt::format("missing template section [{}]", name));
  return it->second;
}

std::string render_template(std::string_view tmpl, const TemplateVars& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find('{', pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    out.append(tmpl.substr(pos, open - pos));
    const std::size_t close = tmpl.find('}', open);
    if (close == std::string_view::npos) throw ConfigError("unterminated template placeholder");
    const std::string_view name = tmpl.substr(open + 1, close - open - 1);
    const auto it = vars.find(name);
    if (it == vars.end()) throw ConfigError(fmt::format("unknown template placeholder {{{}}}", name));
    out.append(it->second);
    pos = close + 1;
  }
  return out;
}

}  // namespace dualloop
