#include "synthkit/prompts.hpp"

#include "synthkit/errors.hpp"

namespace synthkit {

namespace {

const std::string kQaGeneration =
    "Generate question-answer pairs from the following article.\n"
    "\n"
    "Article:\n"
    "{article}\n"
    "\n"
    "ONLY `Question: ...` and `Answer: ...` tags are allowed. DO NOT include any other text.";

// Second-stage response prompt: only the response format (short explanation,
// then answer) is contractual; the wording is this project's own.
const std::string kQaResponse =
    "Answer the following question about the article.\n"
    "\n"
    "Article:\n"
    "{article}\n"
    "\n"
    "Question: {question}\n"
    "\n"
    "Your answer format should be like this:\n"
    "Explanation: [your explanation]\n"
    "Answer: [your answer]";

const std::string kWrap =
    "Rewrite the following document to help the user understand the document better.\n"
    "\n"
    "<document>\n"
    "{document}\n"
    "</document>";

const std::string kEgExtract =
    "As a knowledge analyzer, your task is to dissect and understand an article provided by the user.\n"
    "You are required to perform the following steps:\n"
    "\n"
    "1. Summarize the Article: Provide a concise summary of the entire article, capturing the main "
    "points and themes.\n"
    "2. Extract Entities: Identify and list all significant \"nouns\" or entities mentioned within the "
    "article. These entities should include but not limited to:\n"
    "* People: Any individuals mentioned in the article, using the names or references provided.\n"
    "* Places: Both specific locations and abstract spaces relevant to the content.\n"
    "* Object: Any concrete object that is referenced by the provided content.\n"
    "* Concepts: Any significant abstract ideas or themes that are central to the article's discussion.\n"
    "\n"
    "Try to exhaust as many entities as possible. Your response should be structured in a JSON format to "
    "organize the information effectively.\n"
    "Ensure that the summary is brief yet comprehensive, and the list of entities is detailed and "
    "accurate.\n"
    "\n"
    "Here is the format you should use for your response:\n"
    "{{\n"
    "    \"summary\": \"<A concise summary of the article>\",\n"
    "    \"entities\": [\"entity1\", \"entity2\", ...]\n"
    "}}\n"
    "\n"
    "Article:\n"
    "{document}";

const std::string kEgLink =
    "You will act as a knowledge analyzer tasked with dissecting an article provided by the user. Your "
    "role involves two main objectives:\n"
    "1. Rephrasing Content: The user will identify two specific entities mentioned in the article. You "
    "are required to rephrase the content of the article twice:\n"
    "    * Once, emphasizing the first entity.\n"
    "    * Again, emphasizing the second entity.\n"
    "2. Analyzing Interactions: Discuss how the two specified entities interact within the context of "
    "the article.\n"
    "\n"
    "Your responses should provide clear segregation between the rephrased content and the interaction "
    "analysis. Ensure each section of the output include sufficient context, ideally referencing the "
    "article's title to maintain clarity about the discussion's focus.\n"
    "\n"
    "Here is the format you should follow for your response:\n"
    "\n"
    "### Discussion of <title> in relation to <entity1>\n"
    "<Rephrased content focusing on the first entity>\n"
    "\n"
    "### Discussion of <title> in relation to <entity2>\n"
    "<Rephrased content focusing on the second entity>\n"
    "\n"
    "### Discussion of Interaction between <entity1> and <entity2> in context of <title>\n"
    "<Discussion on how the two entities interact within the article>\n"
    "\n"
    "### Document\n"
    "{document}\n"
    "\n"
    "### Entities:\n"
    "- {entity1}\n"
    "- {entity2}";

const std::string kArStrategy =
    "Consider the following document. What are some strategies specific to this document that I can use "
    "to help me learn and remember all of the information contained? Use markdown and prefix each "
    "strategy with ##.\n"
    "\n"
    "<document>\n"
    "{document}\n"
    "</document>";

const std::string kArRewrite =
    "Here's a learning strategy.\n"
    "{strategy}\n"
    "\n"
    "Apply this strategy to the following document:\n"
    "\n"
    "<document>\n"
    "{document}\n"
    "</document>";

const std::string kFocalRewrite =
    "<document>\n"
    "{document}\n"
    "</document>\n"
    "\n"
    "Here's a learning strategy.\n"
    "{strategy}\n"
    "\n"
    "Apply this strategy to the document above, with the focus on the question: {query}";

const std::string kMcqa =
    "### Question\n"
    "{question}\n"
    "\n"
    "### Choices\n"
    "{options}\n"
    "\n"
    "Choose the best answer from the following options after thinking step by step. There is only one "
    "correct choice.\n"
    "Your answer format should be like this:\n"
    "Explanation: [your explanation]\n"
    "Answer: [your answer (only one letter, A, B, C, D, or E)]";

const std::string kFreeForm =
    "### Question\n"
    "{question}\n"
    "\n"
    "Answer the question using the document above.\n"
    "Your answer format should be like this:\n"
    "Explanation: [your explanation]\n"
    "Answer: [your answer]";

// Grading prompt for free-form answers; ours, constrained to a single
// Verdict line so the result is machine-checkable.
const std::string kJudge =
    "You are grading a candidate answer against a gold reference answer.\n"
    "\n"
    "### Question\n"
    "{question}\n"
    "\n"
    "### Gold answer\n"
    "{gold}\n"
    "\n"
    "### Candidate answer\n"
    "{candidate}\n"
    "\n"
    "Decide whether the candidate answer conveys the same answer as the gold reference.\n"
    "Your answer format should be like this:\n"
    "Explanation: [your explanation]\n"
    "Verdict: [CORRECT or INCORRECT]";

}  // namespace

namespace prompts {

const std::string& template_text(PromptKind kind) {
  switch (kind) {
    case PromptKind::QaGeneration: return kQaGeneration;
    case PromptKind::QaResponse: return kQaResponse;
    case PromptKind::Wrap: return kWrap;
    case PromptKind::EgExtract: return kEgExtract;
    case PromptKind::EgLink: return kEgLink;
    case PromptKind::ArStrategy: return kArStrategy;
    case PromptKind::ArRewrite: return kArRewrite;
    case PromptKind::FocalRewrite: return kFocalRewrite;
    case PromptKind::Mcqa: return kMcqa;
    case PromptKind::FreeForm: return kFreeForm;
    case PromptKind::Judge: return kJudge;
    case PromptKind::Unknown: break;
  }
  throw ValidationError("no template for unknown prompt kind");
}

std::string kind_name(PromptKind kind) {
  switch (kind) {
    case PromptKind::QaGeneration: return "qa_generation";
    case PromptKind::QaResponse: return "qa_response";
    case PromptKind::Wrap: return "wrap";
    case PromptKind::EgExtract: return "eg_extract";
    case PromptKind::EgLink: return "eg_link";
    case PromptKind::ArStrategy: return "ar_strategy";
    case PromptKind::ArRewrite: return "ar_rewrite";
    case PromptKind::FocalRewrite: return "focal_rewrite";
    case PromptKind::Mcqa: return "mcqa";
    case PromptKind::FreeForm: return "free_form";
    case PromptKind::Judge: return "judge";
    case PromptKind::Unknown: return "unknown";
  }
  return "unknown";
}

std::string render(std::string_view tpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tpl.size());
  std::size_t i = 0;
  while (i < tpl.size()) {
    char c = tpl[i];
    if (c == '{') {
      if (i + 1 < tpl.size() && tpl[i + 1] == '{') {
        out.push_back('{');
        i += 2;
        continue;
      }
      std::size_t close = tpl.find('}', i + 1);
      if (close == std::string_view::npos) throw ValidationError("unbalanced '{' in template");
      std::string name(tpl.substr(i + 1, close - i - 1));
      auto it = values.find(name);
      if (it == values.end()) throw ValidationError("no value for placeholder '" + name + "'");
      out += it->second;
      i = close + 1;
    } else if (c == '}') {
      if (i + 1 < tpl.size() && tpl[i + 1] == '}') {
        out.push_back('}');
        i += 2;
        continue;
      }
      throw ValidationError("unbalanced '}' in template");
    } else {
      out.push_back(c);
      ++i;
    }
  }
  return out;
}

std::string render(PromptKind kind, const std::map<std::string, std::string>& values) {
  return render(template_text(kind), values);
}

std::string qa_generation(const std::string& article) {
  return render(PromptKind::QaGeneration, {{"article", article}});
}

std::string qa_response(const std::string& article, const std::string& question) {
  return render(PromptKind::QaResponse, {{"article", article}, {"question", question}});
}

std::string wrap_rephrase(const std::string& document) {
  return render(PromptKind::Wrap, {{"document", document}});
}

std::string eg_extract(const std::string& document) {
  return render(PromptKind::EgExtract, {{"document", document}});
}

std::string eg_link(const std::string& document, const std::string& entity1, const std::string& entity2) {
  return render(PromptKind::EgLink, {{"document", document}, {"entity1", entity1}, {"entity2", entity2}});
}

std::string ar_strategy(const std::string& document) {
  return render(PromptKind::ArStrategy, {{"document", document}});
}

std::string ar_rewrite(const std::string& strategy, const std::string& document) {
  return render(PromptKind::ArRewrite, {{"strategy", strategy}, {"document", document}});
}

std::string focal_rewrite(const std::string& document, const std::string& strategy,
                          const std::string& query) {
  return render(PromptKind::FocalRewrite,
                {{"document", document}, {"strategy", strategy}, {"query", query}});
}

std::string mcqa(const std::string& question, const std::string& options_block) {
  return render(PromptKind::Mcqa, {{"question", question}, {"options", options_block}});
}

std::string free_form(const std::string& question) {
  return render(PromptKind::FreeForm, {{"question", question}});
}

std::string judge(const std::string& question, const std::string& gold, const std::string& candidate) {
  return render(PromptKind::Judge, {{"question", question}, {"gold", gold}, {"candidate", candidate}});
}

}  // namespace prompts

PromptKind classify_prompt(std::string_view prompt) {
  auto starts = [&](std::string_view prefix) { return prompt.substr(0, prefix.size()) == prefix; };
  if (starts("Generate question-answer pairs")) return PromptKind::QaGeneration;
  if (starts("Answer the following question about the article.")) return PromptKind::QaResponse;
  if (starts("Rewrite the following document")) return PromptKind::Wrap;
  if (starts("As a knowledge analyzer,")) return PromptKind::EgExtract;
  if (starts("You will act as a knowledge analyzer")) return PromptKind::EgLink;
  if (starts("Consider the following document.")) return PromptKind::ArStrategy;
  if (starts("Here's a learning strategy.")) return PromptKind::ArRewrite;
  if (starts("You are grading a candidate answer")) return PromptKind::Judge;
  if (starts("<document>") && prompt.find("with the focus on the question:") != std::string_view::npos) {
    return PromptKind::FocalRewrite;
  }
  if (starts("### Question") || prompt.find("### Question") != std::string_view::npos) {
    if (prompt.find("### Choices") != std::string_view::npos) return PromptKind::Mcqa;
    if (prompt.find("Answer the question using the document above.") != std::string_view::npos) {
      return PromptKind::FreeForm;
    }
  }
  return PromptKind::Unknown;
}

}  // namespace synthkit
