#include "cemb/synth.hpp"

#include "cemb/errors.hpp"
#include "cemb/rng.hpp"
#include "cemb/training.hpp"

namespace cemb {

std::vector<TopicTheme> default_themes() {
  return {
      {"dogs",
       {"brown", "small", "playful", "furry", "spotted", "shaggy"},
       {"dog", "puppy", "terrier", "hound", "beagle", "collie"},
       {"runs", "barks", "plays", "sleeps", "digs", "fetches"},
       {"in the park", "on the grass", "near the gate", "by the fence", "in the yard",
        "on the porch"}},
      {"kitchen",
       {"busy", "clean", "warm", "bright", "tidy", "cramped"},
       {"chef", "cook", "baker", "waiter", "butcher", "barista"},
       {"cooks", "bakes", "stirs", "serves", "chops", "fries"},
       {"in the kitchen", "at the counter", "by the oven", "at the table", "in the pantry",
        "near the stove"}},
      {"music",
       {"young", "talented", "loud", "gifted", "famous", "shy"},
       {"singer", "guitarist", "drummer", "pianist", "violinist", "cellist"},
       {"sings", "performs", "practices", "strums", "hums", "rehearses"},
       {"on the stage", "in the studio", "at the concert", "in the hall", "on the balcony",
        "in the booth"}},
      {"ocean",
       {"blue", "deep", "calm", "salty", "rough", "distant"},
       {"sailor", "fisherman", "diver", "surfer", "captain", "swimmer"},
       {"swims", "sails", "dives", "paddles", "floats", "drifts"},
       {"in the ocean", "near the shore", "on the boat", "by the reef", "in the harbor",
        "in the cove"}},
      {"forest",
       {"tall", "green", "mossy", "ancient", "dense", "misty"},
       {"hiker", "ranger", "camper", "woodsman", "scout", "climber"},
       {"walks", "climbs", "explores", "wanders", "treks", "rests"},
       {"in the forest", "on the trail", "near the river", "by the tent", "on the ridge",
        "in the clearing"}},
      {"city",
       {"crowded", "noisy", "modern", "gray", "bustling", "neon"},
       {"driver", "vendor", "commuter", "courier", "clerk", "cabbie"},
       {"drives", "sells", "hurries", "delivers", "honks", "parks"},
       {"in the city", "on the street", "at the market", "near the station", "on the plaza",
        "in the alley"}},
      {"school",
       {"eager", "smart", "curious", "diligent", "studious", "bored"},
       {"student", "teacher", "pupil", "professor", "tutor", "freshman"},
       {"reads", "writes", "studies", "learns", "solves", "recites"},
       {"in the classroom", "at the library", "on the campus", "in the lab", "in the hallway",
        "in the auditorium"}},
      {"farm",
       {"wide", "dusty", "rural", "sunny", "muddy", "fenced"},
       {"farmer", "shepherd", "rancher", "grower", "milker", "plowman"},
       {"plants", "harvests", "feeds", "plows", "herds", "waters"},
       {"on the farm", "in the barn", "near the field", "by the silo", "in the meadow",
        "in the orchard"}},
  };
}

void SynthSpec::validate() const {
  if (n_topics < 2) throw ParameterError("SynthSpec: need at least 2 topics");
  if (premises_per_topic < 1) throw ParameterError("SynthSpec: premises_per_topic must be >= 1");
  if (hypotheses_per_premise < 3)
    throw ParameterError("SynthSpec: hypotheses_per_premise must be >= 3");
  if (sts_pairs_per_band < 2) throw ParameterError("SynthSpec: sts_pairs_per_band must be >= 2");
  if (probe_examples_per_topic < 3)
    throw ParameterError("SynthSpec: probe_examples_per_topic must be >= 3");
  size_t available = themes.empty() ? default_themes().size() : themes.size();
  if (static_cast<size_t>(n_topics) > available)
    throw ParameterError("SynthSpec: n_topics exceeds the " + std::to_string(available) +
                         " available themes");
  const std::vector<TopicTheme>& pool = themes.empty() ? default_themes() : themes;
  for (int t = 0; t < n_topics; ++t) {
    const TopicTheme& th = pool[static_cast<size_t>(t)];
    if (th.adjectives.size() < 2 || th.nouns.empty() || th.verbs.empty() || th.places.empty())
      throw ParameterError("SynthSpec: theme '" + th.name +
                           "' needs >= 2 adjectives and nonempty word pools");
  }
}

namespace {

struct Draw {
  std::string adj, noun, verb, place;
};

const std::string& pick(const std::vector<std::string>& pool, Rng& rng) {
  return pool[static_cast<size_t>(rng.below(pool.size()))];
}

Draw draw_words(const TopicTheme& t, Rng& rng) {
  return {pick(t.adjectives, rng), pick(t.nouns, rng), pick(t.verbs, rng), pick(t.places, rng)};
}

std::string premise_text(const Draw& d) {
  return "the " + d.adj + " " + d.noun + " " + d.verb + " " + d.place;
}

std::string entailment_text(const Draw& d, int variant) {
  switch (variant % 3) {
    case 0:
      return "a " + d.noun + " " + d.verb + " " + d.place;
    case 1:
      return "the " + d.adj + " " + d.noun + " " + d.verb;
    default:
      return "a " + d.adj + " " + d.noun + " " + d.verb;
  }
}

std::string contradiction_text(const Draw& d, int variant) {
  if (variant % 2 == 0) return "the " + d.noun + " never " + d.verb;
  return "no " + d.noun + " " + d.verb + " " + d.place;
}

std::string neutral_text(const Draw& d, const TopicTheme& t, Rng& rng) {
  Draw other = draw_words(t, rng);
  return "the " + d.noun + " " + other.verb + " " + other.place;
}

}  // namespace

SynthData gen_synth(const SynthSpec& spec) {
  spec.validate();
  std::vector<TopicTheme> themes = spec.themes.empty() ? default_themes() : spec.themes;
  themes.resize(static_cast<size_t>(spec.n_topics));
  Rng rng(derive_seed(spec.seed, kSeedSynth, 0));

  SynthData data;

  // Training pairs: per premise, hypothesis 0 is always entailment so no
  // anchor is ever dropped for lack of positives.
  std::vector<std::vector<Draw>> topic_draws(themes.size());
  for (size_t t = 0; t < themes.size(); ++t) {
    for (int p = 0; p < spec.premises_per_topic; ++p) {
      Draw d = draw_words(themes[t], rng);
      topic_draws[t].push_back(d);
      std::string premise = premise_text(d);
      int ent_variant = 0, con_variant = 0;
      for (int h = 0; h < spec.hypotheses_per_premise; ++h) {
        Label label = Label::entailment;
        if (h > 0) label = static_cast<Label>(rng.below(3));
        std::string hyp;
        switch (label) {
          case Label::entailment:
            hyp = entailment_text(d, ent_variant++);
            break;
          case Label::neutral:
            hyp = neutral_text(d, themes[t], rng);
            break;
          case Label::contradiction:
            hyp = contradiction_text(d, con_variant++);
            break;
        }
        data.train.push_back({premise, hyp, label});
      }
    }
  }

  // STS pairs in graded gold bands; subsets split 60/40 within each band.
  auto subset_for = [&](int i) { return i % 5 < 3 ? "synth-a" : "synth-b"; };
  auto any_topic = [&] { return static_cast<size_t>(rng.below(themes.size())); };
  auto any_draw = [&](size_t t) -> const Draw& {
    return topic_draws[t][static_cast<size_t>(rng.below(topic_draws[t].size()))];
  };
  for (int i = 0; i < spec.sts_pairs_per_band; ++i) {
    size_t t = any_topic();
    const Draw& d = any_draw(t);
    data.sts.push_back({subset_for(i), "a " + d.noun + " " + d.verb + " " + d.place,
                        "the " + d.noun + " " + d.verb + " " + d.place, 5.0});
  }
  for (int i = 0; i < spec.sts_pairs_per_band; ++i) {
    size_t t = any_topic();
    const Draw& d = any_draw(t);
    data.sts.push_back({subset_for(i), premise_text(d), entailment_text(d, i), 4.0});
  }
  for (int i = 0; i < spec.sts_pairs_per_band; ++i) {
    size_t t = any_topic();
    Draw a = any_draw(t);
    Draw b = any_draw(t);
    if (premise_text(b) == premise_text(a)) b = draw_words(themes[t], rng);
    if (premise_text(b) == premise_text(a)) {
      // rotate the adjective; pools have at least two entries
      const auto& adjs = themes[t].adjectives;
      size_t cur = 0;
      while (adjs[cur] != b.adj) ++cur;
      b.adj = adjs[(cur + 1) % adjs.size()];
    }
    data.sts.push_back({subset_for(i), premise_text(a), premise_text(b), 2.5});
  }
  for (int i = 0; i < spec.sts_pairs_per_band; ++i) {
    size_t t = any_topic();
    const Draw& d = any_draw(t);
    data.sts.push_back({subset_for(i), premise_text(d), contradiction_text(d, i), 1.0});
  }
  for (int i = 0; i < spec.sts_pairs_per_band; ++i) {
    size_t ta = any_topic();
    size_t tb = (ta + 1 + rng.below(themes.size() - 1)) % themes.size();
    data.sts.push_back(
        {subset_for(i), premise_text(any_draw(ta)), premise_text(any_draw(tb)), 0.0});
  }

  // Probe task: topic identification from fresh single sentences.
  data.probe.name = "synth-topic";
  data.probe.n_classes = spec.n_topics;
  for (size_t t = 0; t < themes.size(); ++t) {
    for (int i = 0; i < spec.probe_examples_per_topic; ++i) {
      Draw d = draw_words(themes[t], rng);
      data.probe.examples.push_back({premise_text(d), std::nullopt, static_cast<int>(t)});
    }
  }
  return data;
}

}  // namespace cemb
