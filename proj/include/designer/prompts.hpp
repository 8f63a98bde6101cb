#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "designer/error.hpp"
#include "designer/taxonomy.hpp"

namespace designer::prompts {

/// Single-pass substitution of {name} placeholders. Substituted values are
/// never rescanned, and unknown {tokens} (LaTeX braces etc.) are left alone.
inline std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        const std::string name(tmpl.substr(i + 1, close - i - 1));
        if (auto it = values.find(name); it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

// Few-shot discipline classification. {labels} is the bracketed label list.
inline constexpr std::string_view kDiscipline =
    R"P(You are a professional multidisciplinary data labeling expert specializing in the classification of multidisciplinary academic questions. Please select the ONE most relevant label from the given list of discipline labels for the input question data. For question data that you cannot determine, use the "Unknown Discipline" label. Please directly output "labels": "(the label you selected)".

# List of Discipline Labels:
{labels}

# Example 1
Input: "Consider a photon traveling at the speed of light. How does the photon experience space, and what are the implications of relativistic beaming on its perception of spatial dimensions? Provide a detailed explanation, including any relevant mathematical derivations and physical principles."
Output: "labels": "Physics"

# Example 2
Input: "A heavy pole, of mass M and length L, is freely hinged to a wall at the point O. A rope connects the other end of the pole, B, to a fixed point A on the wall above O. The system is in equilibrium, with the pole making an angle of \(\theta\) with the horizontal, and the rope making an angle of \(\alpha\) with the horizontal. Explore how the system's parameters (M, L, \(\theta\), \(\alpha\)) affect its equilibrium and stability."
Output: "labels": "Mechanics"

# Example 3
Input: "If John rented a car for $150 and had to buy 8 gallons of gas at $3.50 per gallon to fill it up, and the final expense is $0.50 per mile, how much did it cost him to drive 320 miles?"
Output: "labels": "Mathematics"

# Input Question Data
Input: "{text}"
Output: )P";

inline constexpr std::string_view kDifficulty =
    R"P(You are an expert in education and examination, specializing in classifying the difficulty levels of multidisciplinary questions. For the given question, please evaluate its difficulty based on the complexity and length of the reasoning required to answer it. Label it as one of the following: **Easy**, **Medium**, **Hard**, or **Very Hard**. Please directly output "Difficulty: (Your chosen label)".

# Example 1
Input: "Consider a photon traveling at the speed of light. How does the photon experience space, and what are the implications of relativistic beaming on its perception of spatial dimensions? Provide a detailed explanation, including any relevant mathematical derivations and physical principles."
Output: "Difficulty: Very Hard"

# Example 2
Input: "A heavy pole, of mass M and length L, is freely hinged to a wall at the point O. A rope connects the other end of the pole, B, to a fixed point A on the wall above O. The system is in equilibrium, with the pole making an angle of \(\theta\) with the horizontal, and the rope making an angle of \(\alpha\) with the horizontal. Explore how the system's parameters (M, L, \(\theta\), \(\alpha\)) affect its equilibrium and stability."
Output: "Difficulty: Hard"

# Example 3
Input: "If John rented a car for $150 and had to buy 8 gallons of gas at $3.50 per gallon to fill it up, and the final expense is $0.50 per mile, how much did it cost him to drive 320 miles?"
Output: "Difficulty: Easy"

# Given Question
Input: "{text}"
Output: )P";

inline constexpr std::string_view kQuestionType =
    R"P(You are an expert in education and examination, specializing in classifying question types. For the given question, please evaluate its question type and label it as one of the following: **Problem-solving question**, **Multiple-choice question**, **Proof question**, or **Other question types**. For any question that you cannot determine, use the "Other question types" label. Please directly output "Question type: (Your chosen label)".

# Example 1
Input: "Determine the number of $k$-letter sequences composed of the letters $A$ and $B$ such that the sequence contains at least two consecutive $A$'s."
Output: "Question type: Problem-solving question"

# Example 2
Input: "Consider the function $f(x) = \frac{e^{x}}{x}$. The value of the integral $I = \int_{1}^{\infty} \left( \frac{e^{x}}{x} - \frac{e^{-x}}{x} \right) dx$ is ___."
Output: "Question type: Other question types"

# Example 3
Input: "Given that $a\in\{-1,2, \frac{1}{2},3, \frac{1}{3}\}$, if $f(x)=x^{a}$ is an odd function and is monotonically increasing on $(0,+\infty)$, then the possible values of the real number $a$ are ( ).
  A: $-1, 3$
  B: $\frac{1}{3}, 3$
  C: $-1, \frac{1}{3}, 3$
  D: $\frac{1}{3}, \frac{1}{2}, 3$"
Output: "Question type: Multiple-choice question"

# Given Question
Input: "{text}"
Output: )P";

inline constexpr std::string_view kWebReasoningRubric =
    R"P(You will be provided with text from the internet.

Evaluate the following text extract for its potential usefulness for studying reasoning process. Use the following 5-point scoring system described below. Start from 0, points are accumulated based on the satisfaction of each criterion:

(1) Add 1 point if the extract contains any reasoning or thinking process.

(2) Add 1 point if the extract contains any explicit subgoal setting, where the writer breaks down the problem into smaller, intermediate goals. Subgoal setting might look like:
 - "First, we need to find ..., then we can determine ..."
 - "To solve ..., let's first ..., then ..."
 - "Let's tackle ... in three parts: (1) ..., (2) ..., and (3) ..."
 - "To ..., I'll first ..., then ..."

(3) Add 1 point if the extract contains any verification steps. We want to mark instances where the writer explicitly checks their own work, such as by comparing the result to a known value or by checking the result of a calculation. Verification steps might look like:
 - "Let's check ..."
 - "To verify this is correct, I'll ..."
 - "Let's test ... with a simple case: ..."
 - "To ensure this solution is valid, I'll check if ..."

(4) Add 1 point if the text contains any backtracking behavior, where the writer realizes a path won't work and explicitly goes back to try a different approach. An example of backtracking is: "Let me try again", "Wait", "I made a mistake", or "we need to try a different sequence of operations". We want to mark instances where the writer abandons a thought and backtracks to a previous computation.

(5) Add 1 point if the text contains any backward-chaining behavior, where the writer is working towards a goal but starts from the goal and works backward. It might like:
 - "To solve ..., let's start with what we want to prove: ...Let's verify this."
 - "If we want to find ..., let's start with the desired result and work backward."
 - "To determine ..., I know the result ... Working backward from this final state using

# Task Format
Format your response in markdown as follows:

## Thoughts
[Brief description describing what behavior was noticed and where subgoal setting may have occurred, less than 100 words]

## Final score
[total points]

# Text to evaluate for reasoning degree
{text}

# Response)P";

// Stand-in for the readability and helpfulness classifiers; any model served
// under the classifier role must answer with the JSON object below.
inline constexpr std::string_view kQualityAssessment =
    R"P(You are a text quality assessor for an educational book corpus. Evaluate the text segment below on two criteria.

(1) Readability: answer "positive" if the text is coherent and well organized, or "negative" if it is incoherent, garbled, or disorganized.

(2) Helpfulness: rate the educational value of the text on an integer scale from 0 (no educational value) to 5 (outstanding educational value for teaching at the primary to university level).

Please directly output a JSON object of the form {"readability": "positive or negative", "helpfulness": integer 0-5}.

# Text Segment
{text}

# Output
)P";

inline constexpr std::string_view kLogicExtraction =
    R"P(You are an expert educator and a specialist in exam question design. Below, I have provided an exam question. Your task is to deduce the thought process of the question designer. Analyze how they constructed this question based on the relevant knowledge points. You need to go beyond the specific details of the question and its knowledge points to abstract and summarize the underlying design logic and principles behind the question.

The goal is for me to be able to use this abstracted design logic to create other high-quality, challenging questions that require complex logical reasoning for different knowledge points and source materials.

**Finally, you must organize the abstracted question-design logic you have summarized into English Mermaid format.**

--- Analyze the Question Design Logic from the Following Question ---

**Question:**
{text})P";

inline constexpr std::string_view kRetrievalInstruction =
    "Given a book snippet, retrieve the most suitable question-design logic in Mermaid format for creating a "
    "challenging exam question from the book snippet.";

inline constexpr std::string_view kSynthesisHead =
    R"P(You are an expert in the field of education and examination design, and you are writing exam questions. Your task is to use the provided text to generate a high-quality exam question. Please follow the steps below to generate an English exam question and a reference answer:

**1. Create an Exam Question:**
- Based on the provided source text, write a challenging exam question at the graduate-level or above.
- Below are {count} question-design logics provided in Mermaid format. You need to select the most suitable question-design logic for creating a challenging question from the source text, and then strictly follow the corresponding question-design logic and steps to create a challenging question. Please record which design logic you used (by number) and output the corresponding numeric ID in the "id" field of the JSON below.
- The question should require critical thinking and test deep understanding and problem-solving skills, not just simple fact recall.
- The question must be self-contained and answerable without using the source text. If the question you write requires an answer based on the content of the source text, you must include the corresponding content and information from the source text within the question itself to make it self-contained.
- Ensure the question is self-contained, clear, without missing information or ambiguity, and has a correct answer.
- For multiple-choice questions, you should first analyze and determine the answer, then design the options to ensure that one specific option is the correct answer. The questions you design need to include as many options as possible (four or more). Do not be limited to only four options (A, B, C, D).

**2. Provide the Reference Answer:**
- Use the information in the source text to write a concise and accurate reference answer to the question you just created.
- If there is a final, single result or conclusion (like a number, formula, or short phrase), state it clearly at the end with: "The final answer is: \boxed{answer}." Otherwise, do not output \boxed{answer}.

**At the end of your response, please organize your results into the following JSON format:**
{
  "exam_question": "*(Your question goes here)*",
  "reference_answer": "*(Your reference answer goes here)*",
  "id": "*(The ID of the logic you selected goes here)*"
}
)P";

inline constexpr std::string_view kSynthesisLogicBlock = R"P(
**--- Question-Design Logic {n} ---**
```Mermaid
{logic}
```
)P";

inline constexpr std::string_view kSynthesisTail = R"P(
**--- Source Text for Question Creation ---**
{text})P";

inline std::string label_list(const Taxonomy& taxonomy) {
  std::string out = "[";
  const auto& labels = taxonomy.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out += ", ";
    out += "'" + labels[i] + "'";
  }
  return out + "]";
}

inline std::string discipline_prompt(const std::string& text, const Taxonomy& taxonomy) {
  return render(kDiscipline, {{"labels", label_list(taxonomy)}, {"text", text}});
}
inline std::string difficulty_prompt(const std::string& text) { return render(kDifficulty, {{"text", text}}); }
inline std::string question_type_prompt(const std::string& text) { return render(kQuestionType, {{"text", text}}); }
inline std::string web_rubric_prompt(const std::string& text) { return render(kWebReasoningRubric, {{"text", text}}); }
inline std::string quality_prompt(const std::string& text) { return render(kQualityAssessment, {{"text", text}}); }
inline std::string logic_extraction_prompt(const std::string& text) {
  return render(kLogicExtraction, {{"text", text}});
}

inline std::string count_word(std::size_t n) {
  static constexpr std::string_view kWords[] = {"zero", "one", "two", "three", "four", "five",
                                                "six",  "seven", "eight", "nine", "ten"};
  return n < std::size(kWords) ? std::string(kWords[n]) : std::to_string(n);
}

/// Candidates are numbered 1..m in the order given.
inline std::string synthesis_prompt(const std::string& text, const std::vector<std::string>& logics) {
  if (logics.empty()) throw Error(ErrorCode::invalid_argument, "synthesis prompt needs at least one logic");
  std::string out = render(kSynthesisHead, {{"count", count_word(logics.size())}});
  for (std::size_t i = 0; i < logics.size(); ++i) {
    out += render(kSynthesisLogicBlock, {{"n", std::to_string(i + 1)}, {"logic", logics[i]}});
  }
  out += render(kSynthesisTail, {{"text", text}});
  return out;
}

}  // namespace designer::prompts
