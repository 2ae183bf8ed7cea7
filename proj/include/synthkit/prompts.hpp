#pragma once

#include <map>
#include <string>
#include <string_view>

namespace synthkit {

// Every prompt the toolkit sends is rendered from one of these templates.
// Placeholders use {name} substitution; literal braces are written {{ and }}.
enum class PromptKind {
  QaGeneration,
  QaResponse,
  Wrap,
  EgExtract,
  EgLink,
  ArStrategy,
  ArRewrite,
  FocalRewrite,
  Mcqa,
  FreeForm,
  Judge,
  Unknown,
};

namespace prompts {

const std::string& template_text(PromptKind kind);
std::string kind_name(PromptKind kind);

// {name} -> values[name]; {{ and }} unescape to single braces. Unknown
// placeholders and unbalanced braces are errors.
std::string render(std::string_view template_text, const std::map<std::string, std::string>& values);
std::string render(PromptKind kind, const std::map<std::string, std::string>& values);

std::string qa_generation(const std::string& article);
std::string qa_response(const std::string& article, const std::string& question);
std::string wrap_rephrase(const std::string& document);
std::string eg_extract(const std::string& document);
std::string eg_link(const std::string& document, const std::string& entity1, const std::string& entity2);
std::string ar_strategy(const std::string& document);
std::string ar_rewrite(const std::string& strategy, const std::string& document);
std::string focal_rewrite(const std::string& document, const std::string& strategy, const std::string& query);
std::string mcqa(const std::string& question, const std::string& options_block);
std::string free_form(const std::string& question);
std::string judge(const std::string& question, const std::string& gold, const std::string& candidate);

}  // namespace prompts

// Best-effort recognition of which template produced a prompt; used by the
// deterministic mock backend to answer in the matching format.
PromptKind classify_prompt(std::string_view prompt);

}  // namespace synthkit
