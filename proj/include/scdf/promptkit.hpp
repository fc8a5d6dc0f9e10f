#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "scdf/dataset.hpp"

namespace scdf {

struct RenderedPrompt {
  std::string question_id;
  std::string text;
  size_t char_count = 0;
};

struct ParsedAnswer {
  double probability = 0.0;
  std::string raw_span;
  std::string reasoning;
};

// Prompt template with named placeholders:
//   {entity} {month} {index} {delta} {sigma} {context} {next_month}
// `{delta}` expands to the direction and magnitude of the prior change,
// e.g. "increased by 0.20" or "decreased by 0.26".
class PromptTemplate {
 public:
  PromptTemplate();  // built-in forecasting template
  explicit PromptTemplate(std::string text);
  static PromptTemplate from_file(const std::filesystem::path& path);

  const std::string& text() const { return text_; }
  RenderedPrompt render(const ForecastingQuestion& q) const;

 private:
  std::string text_;
};

std::string_view default_prompt_template();

RenderedPrompt render_prompt(const ForecastingQuestion& q);

// "increased by 0.20" / "decreased by 0.26" / "changed by 0.00"
std::string describe_change(double delta);

// Context block body: a bullet per article, or "No recent articles available."
std::string render_context(const std::vector<NewsArticle>& news);

// Extracts the last <answer>...</answer> span. Throws NoAnswerTag,
// MalformedNumber or OutOfRange.
ParsedAnswer parse_answer(std::string_view model_output);

}  // namespace scdf
