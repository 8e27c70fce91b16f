#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tcr::datagen {

enum class Relation { capital_of, birth_year_of, author_of, located_in, invented_by, currency_of };

inline constexpr std::array<Relation, 6> kRelations = {
    Relation::capital_of,  Relation::birth_year_of, Relation::author_of,
    Relation::located_in,  Relation::invented_by,   Relation::currency_of};

const char* to_string(Relation r);
std::optional<Relation> relation_from_string(std::string_view s);

// Template 0 is the canonical statement; the negation negates template 0.
struct RelationSpec {
  Relation relation;
  std::vector<std::string> templates;
  std::string negation;
  std::string question;
  const std::vector<std::string>* subjects;
  const std::vector<std::string>* objects;
};

const RelationSpec& relation_spec(Relation r);
std::size_t lexicon_capacity();

// Fills {s} and {o} and upper-cases the first character.
std::string render(std::string_view tmpl, std::string_view subject, std::string_view object);
std::string render_statement(std::string_view subject, Relation r, std::string_view object);
std::string render_question(std::string_view subject, Relation r);

struct ParsedStatement {
  std::string subject;
  Relation relation;
  std::string object;
  bool negated = false;
  int template_index = 0;  // -1 for the negation template
};

// Template inverse for a single sentence; nullopt when no template matches.
std::optional<ParsedStatement> parse_statement(std::string_view sentence);
// Number of templates matching the sentence (1 for every generated sentence).
int count_template_matches(std::string_view sentence);

struct ParsedQuestion {
  std::string subject;
  Relation relation;
};

std::optional<ParsedQuestion> parse_question(std::string_view question);

std::vector<std::string> split_sentences(std::string_view text);

// Character trigrams of each lower-cased word wrapped as "<word>".
std::vector<std::string> word_trigrams(std::string_view text);
bool shares_trigram(std::string_view a, std::string_view b);

}  // namespace tcr::datagen
