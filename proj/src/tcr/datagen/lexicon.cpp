#include "tcr/datagen/lexicon.hpp"

#include <algorithm>
#include <regex>
#include <sstream>

#include "tcr/common/errors.hpp"

namespace tcr::datagen {

namespace {

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

// every concatenation a+b+c, capitalized
std::vector<std::string> combos(std::string_view a, std::string_view b, std::string_view c) {
  std::vector<std::string> out;
  for (const auto& x : words(a))
    for (const auto& y : words(b))
      for (const auto& z : words(c)) out.push_back(capitalize(x + y + z));
  return out;
}

std::vector<std::string> full_names(std::string_view firsts, const std::vector<std::string>& lasts) {
  std::vector<std::string> out;
  for (const auto& f : words(firsts))
    for (const auto& l : lasts) out.push_back(f + " " + l);
  return out;
}

struct Lexicons {
  std::vector<std::string> cities, persons, books, landmarks, inventions, currencies;
  std::vector<std::string> countries, years, writers, provinces, inventors;

  Lexicons() {
    cities = combos("bel var kal mer dor tan sil rav hel gar nor pel ost wen vil brim",
                    "mo ri do ve ko su te la", "burg heim mont ford haven dorf");
    persons = full_names(
        "Ada Alan Bela Cora Dario Elin Fabio Greta Hugo Ines Jonas Kaia Lorin Mira Nils "
        "Olga Pavel Rosa Sven Talia Vera Wim Xena Yara Zeno Anton Cyril Dagny Emil Frida",
        combos("ab bren cas dum ek fair gal hal", "er ov ald", "son ski man"));
    for (const auto& a : words("Silent Crimson Hollow Distant Golden Broken Hidden Endless Quiet Burning "
                               "Frozen Wandering Forgotten Restless Fading Gentle Bitter Silver Iron Velvet "
                               "Scarlet Amber Pale Lonely Sunken Savage Tender Wild Hungry Luminous"))
      for (const auto& n : words("River Garden Mirror Harbor Lantern Orchard Compass Winter Voyage Kingdom "
                                 "Meadow Shadow Forest Letter Island Empire Echo Sparrow Ember Tide "
                                 "Citadel Canyon Requiem Tapestry Labyrinth Cathedral Prophecy Covenant Monsoon Glacier"))
        books.push_back(a + " " + n);
    for (const auto& p : words("as ib ul om ez yr ax ob uv"))
      for (const auto& q : words("wick gate cross field well moor"))
        for (const auto& k : words("tower bridge cathedral museum fountain library arena observatory"))
          landmarks.push_back("the " + p + q + " " + k);
    std::vector<std::string> devices;
    for (const auto& p : words("aero hydro chrono electro photo thermo magneto spectro gyro seismo kine tele"))
      for (const auto& s : words("graph scope meter phone stat lith dyne vox tron plex")) devices.push_back("the " + p + s);
    inventions = devices;
    for (const auto& d : devices)
      for (const auto& k : words("engine lamp loom press valve")) inventions.push_back(d + " " + k);
    for (const auto& p : words("zu qui fyo jha wue bry sko vel"))
      for (const auto& q : words("ng x ck ph z"))
        for (const auto& c : words("crown mark dinar florin shilling rupee thaler peso"))
          currencies.push_back("the " + p + q + " " + c);

    countries = combos("Tuv Zar Quen Vosk Prel Ystr Obr Kast Ulm Drav Fenn Grel", "a o i e", "nia stan land ria via");
    for (int y = 1500; y < 2000; ++y) years.push_back(std::to_string(y));
    writers = full_names("Imogen Thaddeus Ottoline Bartholomew Philippa Ignatius Rosalind Cornelius Henrietta Augustin",
                         combos("whit pemb thorn ashc crow lang mere", "ley ridge worth combe", "e y"));
    provinces = combos("Hox Luq Pyr Nyv Jost Wex Kyth", "u y o", "mark shire dale moor vale");
    inventors = full_names("Kwame Svetlana Hiroshi Oluwaseun Dmitri Ingeborg Rafael Anneliese",
                           combos("zyg schw brzu kov tch", "ick enko ecki", "ov it"));
  }
};

const Lexicons& lexicons() {
  static const Lexicons lex;
  return lex;
}

std::vector<RelationSpec> build_specs() {
  const auto& L = lexicons();
  return {
      {Relation::capital_of,
       {"{s} is the capital of {o}.", "The capital of {o} is {s}.", "{o} has {s} as its capital city."},
       "{s} is not the capital of {o}.",
       "What country is {s} the capital of?",
       &L.cities,
       &L.countries},
      {Relation::birth_year_of,
       {"{s} was born in {o}.", "The birth year of {s} is {o}.", "In {o}, {s} was born."},
       "{s} was not born in {o}.",
       "In what year was {s} born?",
       &L.persons,
       &L.years},
      {Relation::author_of,
       {"{s} was written by {o}.", "The author of {s} is {o}.", "{o} wrote {s}."},
       "{s} was not written by {o}.",
       "Who wrote {s}?",
       &L.books,
       &L.writers},
      {Relation::located_in,
       {"{s} is located in {o}.", "{s} can be found in {o}.", "The province of {o} is home to {s}."},
       "{s} is not located in {o}.",
       "In which province is {s} located?",
       &L.landmarks,
       &L.provinces},
      {Relation::invented_by,
       {"{s} was invented by {o}.", "The inventor of {s} is {o}.", "{o} invented {s}."},
       "{s} was not invented by {o}.",
       "Who invented {s}?",
       &L.inventions,
       &L.inventors},
      {Relation::currency_of,
       {"{s} is the currency of {o}.", "The official currency of {o} is {s}.", "{o} uses {s} as its currency."},
       "{s} is not the currency of {o}.",
       "Which country uses {s} as its currency?",
       &L.currencies,
       &L.countries},
  };
}

const std::vector<RelationSpec>& specs() {
  static const std::vector<RelationSpec> s = build_specs();
  return s;
}

// Compiled template inverse. slot_order[i] is 's' or 'o' for capture group i+1.
struct Matcher {
  Relation relation;
  int template_index;
  bool negated;
  std::regex re;
  std::string slot_order;
};

std::string escape_regex(std::string_view lit) {
  static const std::string special = R"(\^$.|?*+()[]{}/)";
  std::string out;
  for (char c : lit) {
    if (special.find(c) != std::string::npos) out += '\\';
    out += c;
  }
  return out;
}

// Entity slot: may not start with, or span, a template connective.
const std::string kSlot = "(?!(?:by|not) )((?:(?! (?:is|was|by|not) ).)+)";

Matcher compile(Relation r, int index, bool negated, std::string_view tmpl, bool capitalized) {
  std::string pattern = "^";
  std::string order;
  std::size_t pos = 0;
  std::string literal_src(tmpl);
  if (capitalized) literal_src = capitalize(literal_src);
  while (pos < literal_src.size()) {
    auto s = literal_src.find("{s}", pos);
    auto o = literal_src.find("{o}", pos);
    auto next = std::min(s, o);
    if (next == std::string::npos) {
      pattern += escape_regex(std::string_view(literal_src).substr(pos));
      break;
    }
    pattern += escape_regex(std::string_view(literal_src).substr(pos, next - pos));
    pattern += kSlot;
    order += (next == s) ? 's' : 'o';
    pos = next + 3;
  }
  pattern += "$";
  return {r, index, negated, std::regex(pattern), order};
}

const std::vector<Matcher>& statement_matchers() {
  static const std::vector<Matcher> m = [] {
    std::vector<Matcher> out;
    for (const auto& spec : specs()) {
      for (std::size_t i = 0; i < spec.templates.size(); ++i)
        out.push_back(compile(spec.relation, static_cast<int>(i), false, spec.templates[i], true));
      out.push_back(compile(spec.relation, -1, true, spec.negation, true));
    }
    return out;
  }();
  return m;
}

const std::vector<Matcher>& question_matchers() {
  static const std::vector<Matcher> m = [] {
    std::vector<Matcher> out;
    for (const auto& spec : specs()) out.push_back(compile(spec.relation, 0, false, spec.question, true));
    return out;
  }();
  return m;
}

// a slot rendered at sentence start had its first letter upper-cased
std::string uncapitalize_slot(std::string v, std::size_t offset) {
  if (offset == 0 && v.rfind("The ", 0) == 0) v[0] = 't';
  return v;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

const char* to_string(Relation r) {
  switch (r) {
    case Relation::capital_of: return "capital_of";
    case Relation::birth_year_of: return "birth_year_of";
    case Relation::author_of: return "author_of";
    case Relation::located_in: return "located_in";
    case Relation::invented_by: return "invented_by";
    case Relation::currency_of: return "currency_of";
  }
  return "unknown";
}

std::optional<Relation> relation_from_string(std::string_view s) {
  for (Relation r : kRelations)
    if (s == to_string(r)) return r;
  return std::nullopt;
}

const RelationSpec& relation_spec(Relation r) { return specs()[static_cast<std::size_t>(r)]; }

std::size_t lexicon_capacity() {
  std::size_t n = 0;
  for (const auto& s : specs()) n += s.subjects->size();
  return n;
}

std::string render(std::string_view tmpl, std::string_view subject, std::string_view object) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    if (tmpl.compare(pos, 3, "{s}") == 0) {
      out += subject;
      pos += 3;
    } else if (tmpl.compare(pos, 3, "{o}") == 0) {
      out += object;
      pos += 3;
    } else {
      out += tmpl[pos++];
    }
  }
  return capitalize(std::move(out));
}

std::string render_statement(std::string_view subject, Relation r, std::string_view object) {
  return render(relation_spec(r).templates[0], subject, object);
}

std::string render_question(std::string_view subject, Relation r) {
  return render(relation_spec(r).question, subject, "");
}

std::optional<ParsedStatement> parse_statement(std::string_view sentence) {
  std::string text = trim(sentence);
  std::smatch m;
  for (const auto& matcher : statement_matchers()) {
    if (!std::regex_match(text, m, matcher.re)) continue;
    ParsedStatement p;
    p.relation = matcher.relation;
    p.negated = matcher.negated;
    p.template_index = matcher.template_index;
    for (std::size_t g = 0; g < matcher.slot_order.size(); ++g) {
      auto offset = static_cast<std::size_t>(m.position(static_cast<int>(g + 1)));
      std::string v = uncapitalize_slot(m[static_cast<int>(g + 1)].str(), offset);
      (matcher.slot_order[g] == 's' ? p.subject : p.object) = std::move(v);
    }
    return p;
  }
  return std::nullopt;
}

int count_template_matches(std::string_view sentence) {
  std::string text = trim(sentence);
  int n = 0;
  for (const auto& matcher : statement_matchers())
    if (std::regex_match(text, matcher.re)) ++n;
  return n;
}

std::optional<ParsedQuestion> parse_question(std::string_view question) {
  std::string text = trim(question);
  std::smatch m;
  for (const auto& matcher : question_matchers()) {
    if (!std::regex_match(text, m, matcher.re)) continue;
    auto offset = static_cast<std::size_t>(m.position(1));
    return ParsedQuestion{uncapitalize_slot(m[1].str(), offset), matcher.relation};
  }
  return std::nullopt;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    bool end = (text[i] == '.' || text[i] == '?') && (i + 1 == text.size() || text[i + 1] == ' ');
    if (end) {
      auto s = trim(text.substr(start, i + 1 - start));
      if (!s.empty()) out.push_back(std::move(s));
      start = i + 1;
    }
  }
  auto tail = trim(text.substr(std::min(start, text.size())));
  if (!tail.empty()) out.push_back(std::move(tail));
  return out;
}

std::vector<std::string> word_trigrams(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) return;
    std::string w = "<" + cur + ">";
    for (std::size_t i = 0; i + 3 <= w.size(); ++i) out.push_back(w.substr(i, 3));
    cur.clear();
  };
  for (char c : text) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'') cur += c;
    else flush();
  }
  flush();
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool shares_trigram(std::string_view a, std::string_view b) {
  auto ga = word_trigrams(a);
  auto gb = word_trigrams(b);
  std::vector<std::string> common;
  std::set_intersection(ga.begin(), ga.end(), gb.begin(), gb.end(), std::back_inserter(common));
  return !common.empty();
}

}  // namespace tcr::datagen
