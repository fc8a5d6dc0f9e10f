#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace scdf {

// Error hierarchy. The three category bases map onto CLI exit codes:
// InputError -> 1, IntegrityError -> 2, EndpointError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class IntegrityError : public Error {
 public:
  using Error::Error;
};

class EndpointError : public Error {
 public:
  using Error::Error;
};

// index_core
class MissingMonth : public InputError {
 public:
  using InputError::InputError;
};
class InsufficientHistory : public InputError {
 public:
  using InputError::InputError;
};
class DegenerateThreshold : public InputError {
 public:
  using InputError::InputError;
};

// dataset
class EmptyDataset : public InputError {
 public:
  using InputError::InputError;
};

class LeakageDetected : public IntegrityError {
 public:
  LeakageDetected(const std::string& what, std::vector<std::string> ids)
      : IntegrityError(what), offending_ids(std::move(ids)) {}
  std::vector<std::string> offending_ids;
};

class LookAheadViolation : public IntegrityError {
 public:
  LookAheadViolation(const std::string& what, std::string question,
                     std::string article)
      : IntegrityError(what),
        question_id(std::move(question)),
        article_id(std::move(article)) {}
  std::string question_id;
  std::string article_id;
};

// promptkit
class AnswerParseError : public InputError {
 public:
  using InputError::InputError;
};
class NoAnswerTag : public AnswerParseError {
 public:
  using AnswerParseError::AnswerParseError;
};
class MalformedNumber : public AnswerParseError {
 public:
  using AnswerParseError::AnswerParseError;
};
class OutOfRange : public AnswerParseError {
 public:
  using AnswerParseError::AnswerParseError;
};

// forecasters
class EndpointUnavailable : public EndpointError {
 public:
  using EndpointError::EndpointError;
};

class AnswerUnparseable : public InputError {
 public:
  AnswerUnparseable(const std::string& what, std::string raw)
      : InputError(what), raw_output(std::move(raw)) {}
  std::string raw_output;
};

// training
class GroupTooSmall : public InputError {
 public:
  using InputError::InputError;
};
class Diverged : public IntegrityError {
 public:
  using IntegrityError::IntegrityError;
};
class MissingRollouts : public InputError {
 public:
  using InputError::InputError;
};

// metrics
class EmptyEvaluation : public InputError {
 public:
  using InputError::InputError;
};

// judge
class EmptyTrace : public InputError {
 public:
  using InputError::InputError;
};
class JudgeParseError : public InputError {
 public:
  using InputError::InputError;
};
class MissingKeys : public JudgeParseError {
 public:
  using JudgeParseError::JudgeParseError;
};
class NonBinaryValue : public JudgeParseError {
 public:
  using JudgeParseError::JudgeParseError;
};

// synth
class InfeasibleConfig : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace scdf
