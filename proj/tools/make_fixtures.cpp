// Writes the bundled test corpora: a child-directed conversational corpus
// (short, repetitive utterances) and an encyclopedic written corpus (long
// sentences), both UD-annotated, plus a tagger model trained on the first.
//
//   make_fixtures --out tests/data [--tokens 100000] [--seed 7]

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "verbscope.hpp"

using namespace verbscope;

namespace {

// ---------------------------------------------------------------------------
// Morphology

const std::map<std::string, std::string> kIrregularPast = {
    {"eat", "ate"},       {"drink", "drank"},   {"bite", "bit"},      {"throw", "threw"},
    {"catch", "caught"},  {"hold", "held"},     {"wear", "wore"},     {"read", "read"},
    {"draw", "drew"},     {"build", "built"},   {"put", "put"},       {"sit", "sat"},
    {"sleep", "slept"},   {"go", "went"},       {"come", "came"},     {"run", "ran"},
    {"find", "found"},    {"see", "saw"},       {"give", "gave"},     {"make", "made"},
    {"take", "took"},     {"bring", "brought"}, {"get", "got"},       {"feed", "fed"},
    {"win", "won"},       {"lead", "led"},      {"write", "wrote"},   {"begin", "began"},
    {"fall", "fell"},     {"leave", "left"},    {"hold", "held"},     {"sell", "sold"},
    {"buy", "bought"},    {"teach", "taught"},  {"fight", "fought"},  {"rise", "rose"},
    {"grow", "grew"},     {"sing", "sang"},     {"swim", "swam"},     {"ride", "rode"},
    {"hide", "hid"},      {"break", "broke"},   {"shake", "shook"},   {"cut", "cut"},
    {"choose", "chose"},  {"lose", "lost"},     {"meet", "met"},      {"hang", "hung"},
};
const std::set<std::string> kDoubling = {"hug", "pet", "stop", "drop", "grab", "hop", "rub", "skip", "clap",
                                         "plan", "swim", "run", "sit", "win", "begin", "cut", "put", "get",
                                         "shop", "nap", "tap", "mop", "wrap", "spin", "dig"};

bool is_vowel(char c) { return std::string_view("aeiou").find(c) != std::string_view::npos; }

bool ends_with(const std::string& s, std::string_view suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

std::string third_person(const std::string& v) {
  if (v == "have") return "has";
  if (v == "be") return "is";
  if (ends_with(v, "s") || ends_with(v, "sh") || ends_with(v, "ch") || ends_with(v, "x") || ends_with(v, "z") ||
      ends_with(v, "o")) {
    return v + "es";
  }
  if (v.size() > 1 && v.back() == 'y' && !is_vowel(v[v.size() - 2])) return v.substr(0, v.size() - 1) + "ies";
  return v + "s";
}

std::string past(const std::string& v) {
  if (auto it = kIrregularPast.find(v); it != kIrregularPast.end()) return it->second;
  if (v.back() == 'e') return v + "d";
  if (v.size() > 1 && v.back() == 'y' && !is_vowel(v[v.size() - 2])) return v.substr(0, v.size() - 1) + "ied";
  if (kDoubling.count(v)) return v + v.back() + "ed";
  return v + "ed";
}

std::string gerund(const std::string& v) {
  if (ends_with(v, "ie")) return v.substr(0, v.size() - 2) + "ying";
  if (v.back() == 'e' && !ends_with(v, "ee") && v != "be") return v.substr(0, v.size() - 1) + "ing";
  if (kDoubling.count(v)) return v + v.back() + "ing";
  return v + "ing";
}

std::string plural(const std::string& n) {
  if (ends_with(n, "s") || ends_with(n, "sh") || ends_with(n, "ch") || ends_with(n, "x") || ends_with(n, "z")) {
    return n + "es";
  }
  if (n.size() > 1 && n.back() == 'y' && !is_vowel(n[n.size() - 2])) return n.substr(0, n.size() - 1) + "ies";
  return n + "s";
}

// ---------------------------------------------------------------------------
// Lexicon

struct Noun {
  std::string sg, pl;  // pl empty for mass nouns
  double weight = 1.0;
};

enum class Frame { T, P, TP, PRT, I };

struct Verb {
  std::string lemma;
  Frame frame = Frame::T;
  std::vector<std::string> obj;   // object classes (PP object for P)
  std::string prep;               // preposition or particle
  std::vector<std::string> subj;  // subject classes; empty means pronouns and people
  std::vector<std::string> adv;   // preferred adverbs
  double weight = 1.0;
};

struct Lexicon {
  std::map<std::string, std::vector<Noun>> nouns;
  std::map<std::string, std::vector<std::string>> adjs;  // by noun class
  std::vector<Verb> verbs;
  std::vector<std::string> advs;
  std::vector<std::string> propn;
};

// "class: a b/bplural c! ..." ('!' marks a mass noun); weights fall off slowly.
void add_nouns(Lexicon& lex, const std::string& cls, const std::string& words) {
  double w = 3.0;
  for (auto& item : split_ws(words)) {
    Noun n;
    if (item.back() == '!') {
      n.sg = item.substr(0, item.size() - 1);
    } else if (auto slash = item.find('/'); slash != std::string::npos) {
      n.sg = item.substr(0, slash);
      n.pl = item.substr(slash + 1);
    } else {
      n.sg = item;
      n.pl = plural(item);
    }
    n.weight = w;
    w = std::max(0.6, w * 0.85);
    lex.nouns[cls].push_back(n);
  }
}

Verb verb(std::string lemma, Frame f, std::string obj, std::string prep = {}, double w = 1.0,
          std::string subj = {}, std::string adv = {}) {
  Verb v;
  v.lemma = std::move(lemma);
  v.frame = f;
  v.obj = split_on(obj, ',');
  std::erase_if(v.obj, [](const std::string& s) { return s.empty(); });
  v.prep = std::move(prep);
  v.weight = w;
  v.subj = split_on(subj, ',');
  std::erase_if(v.subj, [](const std::string& s) { return s.empty(); });
  v.adv = split_ws(adv);
  return v;
}

Lexicon conversational_lexicon() {
  Lexicon lex;
  add_nouns(lex, "food", "apple banana cookie sandwich carrot egg cracker grape noodle pancake berry potato/potatoes cheese! toast! soup! cereal!");
  add_nouns(lex, "drink", "juice! milk! water! bottle cup");
  add_nouns(lex, "toy", "ball block doll puzzle truck car train balloon crayon bubble");
  add_nouns(lex, "book", "book story page picture letter song");
  add_nouns(lex, "animal", "dog cat bunny duck cow horse pig bird frog monkey kitty puppy");
  add_nouns(lex, "clothing", "shoe sock hat coat shirt boot diaper mitten jacket");
  add_nouns(lex, "body", "hand nose foot/feet tooth/teeth ear face finger tummy");
  add_nouns(lex, "loc", "table chair stool floor bed couch box shelf/shelves lap tub");
  add_nouns(lex, "container", "door window bag jar drawer lid");
  add_nouns(lex, "person", "mommy daddy baby girl boy lady grandma friend teacher sister");
  add_nouns(lex, "place", "park store kitchen bathroom outside! house garden");
  lex.adjs = {{"food", split_ws("yummy hot big little warm")},
              {"drink", split_ws("cold warm big")},
              {"toy", split_ws("red blue big little new")},
              {"book", split_ws("new funny little")},
              {"animal", split_ws("little big furry silly")},
              {"clothing", split_ws("clean wet new dirty")},
              {"body", split_ws("dirty sticky clean little")},
              {"loc", split_ws("other big little")},
              {"container", split_ws("big other")},
              {"person", split_ws("little big")},
              {"place", split_ws("big")}};
  lex.verbs = {
      verb("eat", Frame::T, "food", "", 5, "", "up nicely"),
      verb("bite", Frame::T, "food", "", 1.5),
      verb("taste", Frame::T, "food,drink", "", 1.2),
      verb("drink", Frame::T, "drink", "", 3, "", "up"),
      verb("want", Frame::T, "food,drink,toy", "", 6),
      verb("like", Frame::T, "food,animal,book", "", 4),
      verb("need", Frame::T, "clothing,drink", "", 2.5),
      verb("try", Frame::T, "food,clothing", "", 2.5),
      verb("throw", Frame::T, "toy", "", 2.5, "", "up"),
      verb("catch", Frame::T, "toy", "", 2),
      verb("kick", Frame::T, "toy", "", 1.5),
      verb("roll", Frame::T, "toy,food", "", 1.3),
      verb("push", Frame::T, "toy,loc", "", 1.8),
      verb("pull", Frame::T, "toy,container", "", 1.5),
      verb("hug", Frame::T, "animal,person", "", 2),
      verb("kiss", Frame::T, "person,body", "", 1.6),
      verb("pet", Frame::T, "animal", "", 1.5, "", "gently"),
      verb("feed", Frame::T, "animal,person", "", 2),
      verb("tickle", Frame::T, "person,body", "", 1.2),
      verb("wash", Frame::T, "body,clothing", "", 2.5),
      verb("brush", Frame::T, "body", "", 2),
      verb("wipe", Frame::T, "body,loc", "", 1.5),
      verb("wear", Frame::T, "clothing", "", 2.5),
      verb("read", Frame::T, "book", "", 3.5),
      verb("draw", Frame::T, "book,animal", "", 2),
      verb("build", Frame::T, "toy", "", 1.5),
      verb("open", Frame::T, "container", "", 3),
      verb("close", Frame::T, "container", "", 2),
      verb("hold", Frame::T, "body,toy,animal", "", 2.5),
      verb("find", Frame::T, "toy,clothing", "", 2.5),
      verb("see", Frame::T, "animal,person", "", 4),
      verb("share", Frame::T, "food,toy", "", 1.3),
      verb("cook", Frame::T, "food", "", 1.3),
      verb("fix", Frame::T, "toy,container", "", 1.2),
      verb("put", Frame::TP, "toy,food,clothing", "on", 4.5),
      verb("give", Frame::TP, "food,toy,drink", "to", 3.5),
      verb("bring", Frame::TP, "toy,book", "to", 2),
      verb("sit", Frame::P, "loc", "on", 3.5, "", "down"),
      verb("climb", Frame::P, "loc", "on", 1.5, "", "up"),
      verb("jump", Frame::P, "loc", "on", 1.8, "", "up"),
      verb("look", Frame::P, "animal,book,person", "at", 4),
      verb("listen", Frame::P, "person,book", "to", 1.5),
      verb("go", Frame::P, "place", "to", 4),
      verb("play", Frame::P, "toy,animal,person", "with", 4),
      verb("talk", Frame::P, "person", "to", 1.5),
      verb("pick", Frame::PRT, "toy,book,clothing", "up", 2.5),
      verb("clean", Frame::PRT, "toy,loc,body", "up", 2),
      verb("take", Frame::PRT, "clothing", "off", 2.5),
      verb("sleep", Frame::I, "", "", 2, "", "now tonight"),
      verb("run", Frame::I, "", "", 1.8, "", "fast away"),
      verb("cry", Frame::I, "", "", 1.2, "", "again"),
      verb("nap", Frame::I, "", "", 1, "", "now"),
      verb("dance", Frame::I, "", "", 1.2, "", "again"),
      verb("swim", Frame::I, "", "", 1, "", "fast"),
  };
  lex.advs = split_ws("now again here there too please today later");
  return lex;
}

Lexicon written_lexicon() {
  Lexicon lex;
  add_nouns(lex, "work", "book novel article paper poem report study essay treatise volume");
  add_nouns(lex, "media", "album single film song record video series documentary soundtrack");
  add_nouns(lex, "official", "president mayor governor senator candidate leader minister chairman bishop");
  add_nouns(lex, "org", "company school university church society club museum bank institute firm");
  add_nouns(lex, "group", "army team rival/rivals enemy force troop navy party faction");
  add_nouns(lex, "structure", "bridge tower cathedral castle road railway station temple canal fortress");
  add_nouns(lex, "region", "province region city state territory district county kingdom colony");
  add_nouns(lex, "science", "species element planet comet fossil mineral compound gene");
  add_nouns(lex, "award", "award prize title championship medal trophy");
  add_nouns(lex, "role", "role part character lead");
  add_nouns(lex, "document", "treaty contract agreement law constitution charter statute");
  add_nouns(lex, "event", "festival tournament conference exhibition ceremony election");
  add_nouns(lex, "water", "river lake sea ocean bay");
  add_nouns(lex, "person", "author artist scientist engineer architect historian composer writer painter");
  lex.adjs = {{"work", split_ws("first influential major second")},
              {"media", split_ws("debut second live successful")},
              {"official", split_ws("former new first local")},
              {"org", split_ws("private national local large")},
              {"group", split_ws("national rival opposing")},
              {"structure", split_ws("new stone original medieval")},
              {"region", split_ws("northern southern eastern western")},
              {"science", split_ws("new rare distant extinct")},
              {"award", split_ws("national annual first")},
              {"role", split_ws("leading main supporting")},
              {"document", split_ws("new peace final")},
              {"event", split_ws("annual international first")},
              {"water", split_ws("large northern")},
              {"person", split_ws("american british famous")}};
  lex.verbs = {
      verb("publish", Frame::T, "work", "", 4, "person,org"),
      verb("write", Frame::T, "work,media", "", 3, "person"),
      verb("edit", Frame::T, "work", "", 1.2, "person"),
      verb("release", Frame::T, "media", "", 4, "group,org"),
      verb("record", Frame::T, "media", "", 2.5, "person,group"),
      verb("produce", Frame::T, "media,work", "", 2.5, "person,org"),
      verb("elect", Frame::T, "official", "", 2.5, "region,org"),
      verb("appoint", Frame::T, "official", "", 2, "official,org"),
      verb("succeed", Frame::T, "official", "", 1.5, "official"),
      verb("found", Frame::T, "org", "", 3.5, "person,official"),
      verb("establish", Frame::T, "org,event", "", 3, "official,org"),
      verb("acquire", Frame::T, "org", "", 2.5, "org"),
      verb("defeat", Frame::T, "group", "", 3, "group"),
      verb("attack", Frame::T, "group,region", "", 2, "group"),
      verb("capture", Frame::T, "region,structure", "", 2, "group"),
      verb("build", Frame::T, "structure", "", 3.5, "org,region"),
      verb("design", Frame::T, "structure", "", 2, "person"),
      verb("destroy", Frame::T, "structure,region", "", 1.8, "group"),
      verb("govern", Frame::T, "region", "", 2, "official"),
      verb("rule", Frame::T, "region", "", 1.8, "official"),
      verb("discover", Frame::T, "science", "", 2.5, "person"),
      verb("describe", Frame::T, "science", "", 2.5, "person,work"),
      verb("classify", Frame::T, "science", "", 1.2, "person"),
      verb("win", Frame::T, "award", "", 3.5, "person,group,media"),
      verb("receive", Frame::T, "award", "", 3, "person,media,org"),
      verb("sign", Frame::T, "document", "", 2.5, "official"),
      verb("ratify", Frame::T, "document", "", 1.2, "region,official"),
      verb("host", Frame::T, "event", "", 2.5, "region,org"),
      verb("organize", Frame::T, "event", "", 2, "org,official"),
      verb("attend", Frame::T, "event,org", "", 2, "person,official"),
      verb("play", Frame::T, "role", "", 2.5, "person"),
      verb("portray", Frame::T, "role,person", "", 1.5, "person"),
      verb("cross", Frame::T, "water,region", "", 1.5, "structure,group"),
      verb("flow", Frame::P, "water,region", "into", 2.5, "water"),
      verb("serve", Frame::P, "official", "as", 3.5, "person,official"),
      verb("move", Frame::P, "region", "to", 2.5, "person,org"),
      verb("belong", Frame::P, "group,org", "to", 1.5, "person,science"),
      verb("compete", Frame::P, "event", "in", 1.8, "person,group"),
      verb("live", Frame::P, "region", "in", 2, "person,science"),
      verb("work", Frame::P, "org", "for", 2, "person"),
      verb("transfer", Frame::TP, "structure,region", "to", 1.5, "official,org"),
      verb("award", Frame::TP, "award", "to", 1.5, "org"),
      verb("sell", Frame::TP, "org,structure", "to", 1.5, "org,person"),
      verb("set", Frame::PRT, "org,event", "up", 1.2, "official,org"),
      verb("carry", Frame::PRT, "document,work", "out", 1.2, "org,official"),
      verb("die", Frame::I, "", "", 1.5, "person,official", "suddenly"),
      verb("retire", Frame::I, "", "", 1.2, "person,official", "later"),
      verb("collapse", Frame::I, "", "", 1, "structure,org", "suddenly"),
  };
  lex.advs = split_ws("later also eventually subsequently initially officially");
  lex.propn = split_ws(
      "London Paris Berlin Vienna Madrid Rome Boston Chicago Toronto Sydney Dublin Oslo Prague Warsaw Lisbon "
      "Smith Johnson Williams Brown Taylor Wilson Davies Evans Thomas Roberts Walker Wright Thompson White "
      "Hughes Edwards Green Hall Wood Harris Martin Jackson Clarke");
  return lex;
}

// ---------------------------------------------------------------------------
// Sentence builder

struct Builder {
  std::vector<Token> toks;
  std::size_t add(const std::string& form, const std::string& lemma, const std::string& upos,
                  const std::string& xpos) {
    toks.push_back(Token{form, lemma, upos, xpos, std::nullopt, ""});
    return toks.size() - 1;
  }
  void attach(std::size_t i, std::size_t head, const std::string& rel) {
    toks[i].head = head;
    toks[i].deprel = rel;
  }
  void root(std::size_t i) {
    toks[i].head.reset();
    toks[i].deprel = "root";
  }
};

template <typename T, typename W>
const T& weighted(const std::vector<T>& items, W weight_of, Rng& rng) {
  double total = 0;
  for (const auto& x : items) total += weight_of(x);
  double u = rng.uniform() * total;
  for (const auto& x : items) {
    u -= weight_of(x);
    if (u < 0) return x;
  }
  return items.back();
}

template <typename T>
const T& pick(const std::vector<T>& items, Rng& rng) {
  return items[rng.below(items.size())];
}

bool chance(Rng& rng, double p) { return rng.uniform() < p; }

struct Generator {
  const Lexicon& lex;
  Rng& rng;
  bool written = false;
  double selectional = 0.9;  // probability an argument respects the verb's class

  std::string any_class() {
    std::vector<std::string> classes;
    for (const auto& [c, _] : lex.nouns) classes.push_back(c);
    return pick(classes, rng);
  }

  std::string class_for(const std::vector<std::string>& prefs) {
    if (prefs.empty() || !chance(rng, selectional)) return any_class();
    return pick(prefs, rng);
  }

  // DET [ADJ] N; returns the noun index. Plural when `plural` and the noun has one.
  std::size_t noun_phrase(Builder& b, const std::string& cls, bool& plural_out, bool allow_plural = true,
                          bool allow_adj = true) {
    const auto& n = weighted(lex.nouns.at(cls), [](const Noun& x) { return x.weight; }, rng);
    bool pl = allow_plural && !n.pl.empty() && chance(rng, written ? 0.35 : 0.3);
    plural_out = pl;
    std::string det;
    if (written) {
      det = pl ? (chance(rng, 0.7) ? "the" : "several") : (chance(rng, 0.8) ? "the" : "a");
    } else {
      static const std::vector<std::string> sg = {"the", "the", "the", "a", "your", "my", "this"};
      static const std::vector<std::string> plu = {"the", "the", "your", "my", "some", "these"};
      det = pick(pl ? plu : sg, rng);
    }
    if (n.pl.empty() && det == "a") det = "the";
    std::string det_x = det == "my" || det == "your" ? "PRP$" : "DT";
    auto d = b.add(det, det, det_x == "PRP$" ? "PRON" : "DET", det_x);
    std::optional<std::size_t> a;
    if (allow_adj && lex.adjs.count(cls) && chance(rng, written ? 0.3 : 0.2)) {
      const auto& adj = pick(lex.adjs.at(cls), rng);
      a = b.add(adj, adj, "ADJ", "JJ");
    }
    auto head = b.add(pl ? n.pl : n.sg, n.sg, "NOUN", pl ? "NNS" : "NN");
    b.attach(d, head, det_x == "PRP$" ? "nmod:poss" : "det");
    if (a) b.attach(*a, head, "amod");
    // written NPs sometimes carry an "of" complement
    if (written && chance(rng, 0.15)) {
      auto of = b.add("of", "of", "ADP", "IN");
      bool p2 = false;
      auto n2 = noun_phrase(b, chance(rng, 0.5) ? "region" : any_class(), p2, true, false);
      b.attach(of, n2, "case");
      b.attach(n2, head, "nmod");
    }
    return head;
  }

  struct Subject {
    std::size_t head;
    bool third_singular;
  };

  Subject subject(Builder& b, const Verb& v) {
    if (written) {
      double r = rng.uniform();
      if (r < 0.15) {
        auto p = b.add(chance(rng, 0.5) ? "it" : "they", "", "PRON", "PRP");
        b.toks[p].lemma = b.toks[p].form;
        return {p, b.toks[p].form == "it"};
      }
      if (r < 0.3 && (v.subj.empty() || std::count(v.subj.begin(), v.subj.end(), "person"))) {
        const auto& name = pick(lex.propn, rng);
        return {b.add(name, name, "PROPN", "NNP"), true};
      }
      bool pl = false;
      auto h = noun_phrase(b, class_for(v.subj), pl);
      return {h, !pl};
    }
    double r = rng.uniform();
    if (r < 0.62) {
      static const std::vector<std::pair<std::string, bool>> prons = {
          {"you", false}, {"you", false}, {"you", false}, {"we", false}, {"i", false},
          {"he", true},   {"she", true},  {"it", true},   {"they", false}};
      const auto& [p, third] = pick(prons, rng);
      return {b.add(p, p, "PRON", "PRP"), third};
    }
    bool pl = false;
    auto h = noun_phrase(b, chance(rng, 0.6) ? "person" : "animal", pl, true, true);
    return {h, !pl};
  }

  // Complements of the verb at index vi.
  void frame(Builder& b, const Verb& v, std::size_t vi) {
    bool pl = false;
    switch (v.frame) {
      case Frame::T: {
        auto o = noun_phrase(b, class_for(v.obj), pl);
        b.attach(o, vi, "obj");
        break;
      }
      case Frame::P: {
        if (!written && !v.adv.empty() && chance(rng, 0.3)) {
          auto a = b.add(v.adv.front(), v.adv.front(), "ADV", "RB");
          b.attach(a, vi, "advmod");
        }
        auto p = b.add(v.prep, v.prep, "ADP", "IN");
        auto o = noun_phrase(b, class_for(v.obj), pl);
        b.attach(p, o, "case");
        b.attach(o, vi, "obl");
        break;
      }
      case Frame::TP: {
        auto o = noun_phrase(b, class_for(v.obj), pl);
        b.attach(o, vi, "obj");
        std::string prep = v.prep;
        std::string cls = written ? (v.prep == "to" ? "org" : "region") : (v.prep == "to" ? "person" : "loc");
        if (!written && v.prep == "on") prep = chance(rng, 0.6) ? "on" : "in";
        auto p = b.add(prep, prep, "ADP", "IN");
        auto o2 = noun_phrase(b, cls, pl);
        b.attach(p, o2, "case");
        b.attach(o2, vi, "obl");
        break;
      }
      case Frame::PRT: {
        auto prt = b.add(v.prep, v.prep, "ADP", "RP");
        b.attach(prt, vi, "compound:prt");
        auto o = noun_phrase(b, class_for(v.obj), pl);
        b.attach(o, vi, "obj");
        break;
      }
      case Frame::I: {
        if (!v.adv.empty() && chance(rng, 0.6)) {
          const auto& adv = pick(v.adv, rng);
          auto a = b.add(adv, adv, "ADV", "RB");
          b.attach(a, vi, "advmod");
        }
        break;
      }
    }
  }

  const Verb& any_verb() { return weighted(lex.verbs, [](const Verb& v) { return v.weight; }, rng); }

  void add_verb(Builder& b, const Verb& v, const std::string& xpos, std::size_t& vi) {
    std::string form = xpos == "VBZ" ? third_person(v.lemma)
                       : xpos == "VBD" || xpos == "VBN" ? past(v.lemma)
                       : xpos == "VBG" ? gerund(v.lemma)
                                       : v.lemma;
    vi = b.add(form, v.lemma, "VERB", xpos);
  }

  // Finite clause; returns the verb index. Tense chosen per domain.
  std::size_t clause(Builder& b, const Verb& v, bool allow_aux) {
    auto s = subject(b, v);
    std::size_t vi = 0;
    double r = rng.uniform();
    if (written) {
      if (r < 0.6) {
        add_verb(b, v, "VBD", vi);
      } else {
        add_verb(b, v, s.third_singular ? "VBZ" : "VBP", vi);
      }
    } else if (allow_aux && r < 0.2) {
      static const std::vector<std::string> modals = {"can", "will", "should", "could"};
      const auto& m = pick(modals, rng);
      auto mi = b.add(m, m, "AUX", "MD");
      add_verb(b, v, "VB", vi);
      b.attach(mi, vi, "aux");
    } else if (allow_aux && r < 0.3) {
      bool i_subj = b.toks[s.head].form == "i";
      std::string aux = s.third_singular ? "is" : i_subj ? "am" : "are";
      auto ai = b.add(aux, "be", "AUX", s.third_singular ? "VBZ" : "VBP");
      add_verb(b, v, "VBG", vi);
      b.attach(ai, vi, "aux");
    } else if (r < 0.5) {
      add_verb(b, v, "VBD", vi);
    } else {
      add_verb(b, v, s.third_singular ? "VBZ" : "VBP", vi);
    }
    b.attach(s.head, vi, "nsubj");
    frame(b, v, vi);
    return vi;
  }

  // Optional material after the core, attached to the root verb.
  void adjunct(Builder& b, std::size_t vi) {
    bool pl = false;
    if (written) {
      double r = rng.uniform();
      if (r < 0.35) {
        auto p = b.add("in", "in", "ADP", "IN");
        auto y = b.add(std::to_string(1700 + rng.below(320)), "", "NUM", "CD");
        b.toks[y].lemma = b.toks[y].form;
        b.attach(p, y, "case");
        b.attach(y, vi, "obl");
      } else if (r < 0.6) {
        static const std::vector<std::string> preps = {"in", "near", "across", "throughout"};
        const auto& pr = pick(preps, rng);
        auto p = b.add(pr, pr, "ADP", "IN");
        auto o = noun_phrase(b, "region", pl, true, true);
        b.attach(p, o, "case");
        b.attach(o, vi, "obl");
      } else if (r < 0.75) {
        static const std::vector<std::string> preps = {"after", "during", "before"};
        const auto& pr = pick(preps, rng);
        auto p = b.add(pr, pr, "ADP", "IN");
        auto o = noun_phrase(b, chance(rng, 0.5) ? "event" : "group", pl, false, false);
        b.attach(p, o, "case");
        b.attach(o, vi, "obl");
      } else if (r < 0.85) {
        const auto& a = pick(lex.advs, rng);
        auto ai = b.add(a, a, "ADV", "RB");
        b.attach(ai, vi, "advmod");
      } else {
        auto p = b.add("in", "in", "ADP", "IN");
        const auto& name = pick(lex.propn, rng);
        auto ni = b.add(name, name, "PROPN", "NNP");
        b.attach(p, ni, "case");
        b.attach(ni, vi, "obl");
      }
      return;
    }
    double r = rng.uniform();
    if (r < 0.3) {
      const auto& a = pick(lex.advs, rng);
      auto ai = b.add(a, a, "ADV", "RB");
      b.attach(ai, vi, "advmod");
    } else if (r < 0.45) {
      auto a1 = b.add("out", "out", "ADV", "RB");
      auto a2 = b.add("here", "here", "ADV", "RB");
      b.attach(a1, vi, "advmod");
      b.attach(a2, a1, "advmod");
    } else if (r < 0.6) {
      auto p = b.add(chance(rng, 0.5) ? "by" : "with", "", "ADP", "IN");
      b.toks[p].lemma = b.toks[p].form;
      auto m = b.add("me", "i", "PRON", "PRP");
      b.attach(p, m, "case");
      b.attach(m, vi, "obl");
    } else {
      static const std::vector<std::string> preps = {"on", "in", "under", "near"};
      const auto& pr = pick(preps, rng);
      auto p = b.add(pr, pr, "ADP", "IN");
      auto o = noun_phrase(b, "loc", pl, true, true);
      b.attach(p, o, "case");
      b.attach(o, vi, "obl");
    }
  }

  // Subordinate or coordinate clause headed by a non-root verb.
  void extra_clause(Builder& b, std::size_t vi) {
    if (written) {
      if (chance(rng, 0.5)) {
        auto c = b.add(",", ",", "PUNCT", ",");
        auto a = b.add("and", "and", "CCONJ", "CC");
        const auto& v2 = any_verb();
        auto v2i = clause(b, v2, false);
        b.attach(c, v2i, "punct");
        b.attach(a, v2i, "cc");
        b.attach(v2i, vi, "conj");
      } else {
        auto c = b.add(",", ",", "PUNCT", ",");
        auto w = b.add("which", "which", "PRON", "WDT");
        auto aux = b.add("was", "be", "AUX", "VBD");
        const auto& v2 = any_verb();
        std::size_t v2i = 0;
        add_verb(b, v2, "VBN", v2i);
        b.attach(c, v2i, "punct");
        b.attach(w, v2i, "nsubj:pass");
        b.attach(aux, v2i, "aux:pass");
        b.attach(v2i, vi, "acl:relcl");
        adjunct(b, v2i);
      }
      return;
    }
    static const std::vector<std::string> conj = {"because", "when", "and then", "so"};
    const auto& c = pick(conj, rng);
    std::vector<std::size_t> markers;
    for (const auto& w : split_ws(c)) {
      bool cc = w == "and" || w == "so";
      markers.push_back(b.add(w, w, w == "then" ? "ADV" : cc ? "CCONJ" : "SCONJ", w == "then" ? "RB" : cc ? "CC" : "IN"));
    }
    const auto& v2 = any_verb();
    auto v2i = clause(b, v2, true);
    for (auto m : markers) b.attach(m, v2i, b.toks[m].upos == "SCONJ" ? "mark" : b.toks[m].upos == "ADV" ? "advmod" : "cc");
    b.attach(v2i, vi, c == "because" || c == "when" ? "advcl" : "conj");
  }

  AnnotatedSentence conversational_sentence(double p_long) {
    Builder b;
    double r = rng.uniform();
    if (r < 0.14) {
      // fragments: interjections and bare noun phrases
      static const std::vector<std::string> intj = {"yes", "no", "okay", "oh", "wow", "uhoh", "good", "hi"};
      if (chance(rng, 0.5)) {
        auto i = b.add(pick(intj, rng), "", "INTJ", "UH");
        b.toks[i].lemma = b.toks[i].form;
        b.root(i);
        auto p = b.add(chance(rng, 0.7) ? "." : "!", "", "PUNCT", ".");
        b.toks[p].lemma = b.toks[p].form;
        b.attach(p, i, "punct");
      } else {
        bool pl = false;
        auto n = noun_phrase(b, any_class(), pl);
        b.root(n);
        auto p = b.add("?", "?", "PUNCT", ".");
        b.attach(p, n, "punct");
      }
      return {b.toks, "", ""};
    }
    const auto& v = any_verb();
    std::size_t vi = 0;
    std::string punct = ".";
    if (r < 0.34) {
      // imperative
      if (chance(rng, 0.3)) {
        auto pl = b.add("please", "please", "INTJ", "UH");
        add_verb(b, v, "VB", vi);
        b.attach(pl, vi, "discourse");
      } else {
        add_verb(b, v, "VB", vi);
      }
      frame(b, v, vi);
    } else if (r < 0.48) {
      // yes/no question
      static const std::vector<std::pair<std::string, std::string>> aux = {
          {"do", "VBP"}, {"can", "MD"}, {"will", "MD"}, {"did", "VBD"}};
      const auto& [a, ax] = pick(aux, rng);
      auto ai = b.add(a, a == "did" ? "do" : a, "AUX", ax);
      auto s = b.add(chance(rng, 0.8) ? "you" : "we", "", "PRON", "PRP");
      b.toks[s].lemma = b.toks[s].form;
      add_verb(b, v, "VB", vi);
      b.attach(ai, vi, "aux");
      b.attach(s, vi, "nsubj");
      frame(b, v, vi);
      punct = "?";
    } else {
      vi = clause(b, v, true);
    }
    b.root(vi);
    if (chance(rng, p_long)) {
      int extras = 1 + static_cast<int>(rng.below(3));
      for (int k = 0; k < extras; ++k) adjunct(b, vi);
      if (chance(rng, 0.55)) extra_clause(b, vi);
    } else if (chance(rng, 0.2)) {
      adjunct(b, vi);
    }
    auto p = b.add(punct, punct, "PUNCT", ".");
    b.attach(p, vi, "punct");
    return {b.toks, "", ""};
  }

  AnnotatedSentence written_sentence() {
    Builder b;
    std::vector<std::size_t> fronted;
    if (chance(rng, 0.3)) {
      // fronted adjunct, attached once the root exists
      auto p = b.add(chance(rng, 0.6) ? "in" : "after", "", "ADP", "IN");
      b.toks[p].lemma = b.toks[p].form;
      std::size_t obj;
      if (b.toks[p].form == "in") {
        obj = b.add(std::to_string(1700 + rng.below(320)), "", "NUM", "CD");
        b.toks[obj].lemma = b.toks[obj].form;
      } else {
        bool pl = false;
        obj = noun_phrase(b, "event", pl, false, false);
      }
      b.attach(p, obj, "case");
      auto c = b.add(",", ",", "PUNCT", ",");
      fronted = {obj, c};
    }
    const auto& v = any_verb();
    auto vi = clause(b, v, false);
    b.root(vi);
    for (auto f : fronted) b.attach(f, vi, b.toks[f].upos == "PUNCT" ? "punct" : "obl");
    int extras = 1 + static_cast<int>(rng.below(4));
    for (int k = 0; k < extras; ++k) adjunct(b, vi);
    if (chance(rng, 0.5)) extra_clause(b, vi);
    if (chance(rng, 0.3)) adjunct(b, vi);
    auto p = b.add(".", ".", "PUNCT", ".");
    b.attach(p, vi, "punct");
    return {b.toks, "", ""};
  }
};

Corpus generate(const Lexicon& lex, bool written, std::size_t target_tokens, std::uint64_t seed,
                const std::string& prefix, double p_long) {
  Rng rng(seed);
  Generator g{lex, rng, written};
  Corpus c;
  c.domain = prefix;
  std::size_t tokens = 0, i = 0;
  while (tokens < target_tokens) {
    auto s = written ? g.written_sentence() : g.conversational_sentence(p_long);
    char id[32];
    std::snprintf(id, sizeof id, "%s-%06zu", prefix.c_str(), ++i);
    s.sentence_id = id;
    validate(s);
    tokens += s.size();
    c.sentences.push_back(std::move(s));
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate the bundled synthetic corpora"};
  std::string out = "tests/data";
  std::size_t tokens = 100000;
  std::uint64_t seed = 7;
  double p_long = 0.25;
  bool no_tagger = false;
  app.add_option("--out", out, "output directory");
  app.add_option("--tokens", tokens, "tokens per corpus");
  app.add_option("--seed", seed, "generator seed");
  app.add_option("--long", p_long, "share of long conversational utterances");
  app.add_flag("--no-tagger", no_tagger, "skip training the tagger model");
  CLI11_PARSE(app, argc, argv);

  std::filesystem::create_directories(out);
  auto conv = generate(conversational_lexicon(), false, tokens, mix64(seed, 1), "conv", p_long);
  auto wr = generate(written_lexicon(), true, tokens, mix64(seed, 2), "wiki", p_long);
  write_corpus(conv, out + "/conversational.conllu", CorpusFormat::conllu);
  write_corpus(wr, out + "/written.conllu", CorpusFormat::conllu);
  for (const auto* c : {&conv, &wr}) {
    auto s = compute_stats(*c);
    std::cerr << c->domain << ": " << s.n_sentences << " sentences, " << s.n_tokens << " tokens, avg length "
              << format_fixed(s.avg_sentence_length, 2) << "\n";
  }
  if (!no_tagger) {
    auto r = train_tagger(conv, {5, 1, 0.0});
    write_tagger(r.model, out + "/tagger.model");
    std::cerr << "tagger train accuracy " << format_fixed(r.train_accuracy, 4) << "\n";
  }
  return 0;
}
