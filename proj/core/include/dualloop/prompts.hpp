#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace dualloop {

using TemplateVars = std::map<std::string, std::string, std::less<>>;

/// Named text templates. The file format is a sequence of `[section]` headers, each followed
/// by the section body; `#` lines before the first section are comments.
class PromptTemplates {
 public:
  static PromptTemplates parse(std::string_view text);
  static PromptTemplates load(const std::filesystem::path& path);
  /// Templates compiled in from data/prompts.txt.
  static const PromptTemplates& builtin();

  bool contains(std::string_view name) const;
  /// Throws ConfigError for an unknown section.
  const std::string& get(std::string_view name) const;

 private:
  std::map<std::string, std::string, std::less<>> sections_;
};

/// Replaces `{name}` placeholders; an unknown placeholder is a ConfigError.
std::string render_template(std::string_view tmpl, const TemplateVars& vars);

}  // namespace dualloop
