#include "scdf/promptkit.hpp"

#include <cmath>

#include <fmt/format.h>

#include "scdf/errors.hpp"
#include "text_util.hpp"

namespace scdf {

namespace {

constexpr std::string_view kDefaultTemplate =
    R"(Instruction:
You are a supply chain analyst forecasting disruption shocks for specific trade flows (countries or products). Given the current disruption index and relevant news, estimate the probability of a disruption next month.

Question:
As of {month}, the supply chain disruption index for {entity} is {index}, having {delta} from the previous month. Will there be a supply chain shock for {entity} next month? A shock is defined as a month-over-month increase exceeding 1 standard deviation ({sigma}) of historical changes.

Resolution Criteria:
Resolves YES if the disruption index increases by more than {sigma} from {month} to {next_month}. Resolves NO otherwise.

Context:
{context}

Output Format:
Provide a probability between 0 and 1 representing the likelihood of a disruption event and a brief explanation grounded in the news context. Return the probability in the format <answer>p</answer> where p is in [0, 1].

Notes:
All inputs are constructed using only information available at the prediction time. Entities include both countries and product categories. Event thresholds are computed from historical training data.
)";

constexpr std::string_view kOpenTag = "<answer>";
constexpr std::string_view kCloseTag = "</answer>";

}  // namespace

std::string_view default_prompt_template() { return kDefaultTemplate; }

std::string describe_change(double delta) {
  const std::string magnitude = fmt::format("{:.2f}", std::fabs(delta));
  if (magnitude == "0.00") return "changed by 0.00";
  return fmt::format("{} by {}", delta > 0 ? "increased" : "decreased", magnitude);
}

std::string render_context(const std::vector<NewsArticle>& news) {
  if (news.empty()) return "No recent articles available.";
  std::string out = "Recent news articles relevant to this question include:";
  for (const auto& a : news) {
    out += fmt::format("\n- [{}] {}", a.published.iso(), a.title);
    if (!a.text.empty()) out += (a.title.empty() ? "" : ": ") + a.text;
  }
  return out;
}

PromptTemplate::PromptTemplate() : text_(kDefaultTemplate) {}

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {}

PromptTemplate PromptTemplate::from_file(const std::filesystem::path& path) {
  return PromptTemplate(detail::read_file(path));
}

RenderedPrompt PromptTemplate::render(const ForecastingQuestion& q) const {
  const std::pair<std::string_view, std::string> values[] = {
      {"entity", q.entity.name()},
      {"month", q.month.display()},
      {"index", fmt::format("{:.2f}", q.current_index)},
      {"delta", describe_change(q.prior_change)},
      {"sigma", fmt::format("{:.2f}", q.sigma)},
      {"context", render_context(q.news)},
      {"next_month", q.month.next().display()},
  };

  // Single left-to-right pass so substituted text is never re-expanded.
  std::string out;
  out.reserve(text_.size() + 512);
  size_t i = 0;
  while (i < text_.size()) {
    if (text_[i] == '{') {
      const size_t close = text_.find('}', i + 1);
      if (close != std::string::npos) {
        const std::string_view name(text_.data() + i + 1, close - i - 1);
        bool replaced = false;
        for (const auto& [key, value] : values) {
          if (key == name) {
            out += value;
            replaced = true;
            break;
          }
        }
        if (replaced) {
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(text_[i++]);
  }
  return RenderedPrompt{q.id, out, out.size()};
}

RenderedPrompt render_prompt(const ForecastingQuestion& q) {
  static const PromptTemplate kTemplate;
  return kTemplate.render(q);
}

ParsedAnswer parse_answer(std::string_view model_output) {
  const size_t close = model_output.rfind(kCloseTag);
  const size_t open =
      close == std::string_view::npos ? close : model_output.rfind(kOpenTag, close);
  if (open == std::string_view::npos) {
    throw NoAnswerTag("no <answer>...</answer> span in model output");
  }
  const auto inner = model_output.substr(open + kOpenTag.size(),
                                         close - open - kOpenTag.size());
  const auto number = detail::trim(inner);
  if (!detail::is_plain_decimal(number)) {
    throw MalformedNumber(fmt::format("answer '{}' is not a plain decimal", inner));
  }
  double p = 0.0;
  try {
    p = detail::parse_decimal(number);
  } catch (const InputError&) {
    throw MalformedNumber(fmt::format("answer '{}' is not representable", number));
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw OutOfRange(fmt::format("answer {} outside [0, 1]", number));
  }
  return ParsedAnswer{p,
                      std::string(model_output.substr(open, close + kCloseTag.size() - open)),
                      std::string(detail::trim(model_output.substr(0, open)))};
}

}  // namespace scdf
