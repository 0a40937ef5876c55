/**
 * Guideline panel shown during sub-clustering: the eleven scenarios in
 * which different word uses change the meaning of an event sentence, so
 * the sentences must NOT be grouped together (or, for the last two,
 * explicitly may be).
 */

export interface GuidelineScenario {
  title: string;
  rule: "different" | "same";
  example: string;
}

export const GUIDELINE_SCENARIOS: GuidelineScenario[] = [
  {
    title: "Single participant vs. group of participants",
    rule: "different",
    example:
      '"a person be playing in the park" vs "a person and another person be playing in the park"',
  },
  {
    title: "Affirmation vs. negation",
    rule: "different",
    example: '"a person be asleep" vs "a person do not sleep"',
  },
  {
    title: "Present vs. future tense",
    rule: "different",
    example: '"a person go to sleep" vs "a person will go to sleep"',
  },
  {
    title: "Ability",
    rule: "different",
    example: '"a person do not eat" vs "a person cannot eat"',
  },
  {
    title: "Intention or desire",
    rule: "different",
    example: '"a person do not eat" vs "a person do not want to eat"',
  },
  {
    title: "Deduction or possibility",
    rule: "different",
    example: '"it rain" vs "it may rain"',
  },
  {
    title: "Obligation, advice or prohibition",
    rule: "different",
    example: '"a person do not eat" vs "a person should not eat"',
  },
  {
    title: "Offers, effort or decision",
    rule: "different",
    example:
      '"a person help another person" vs "a person offer to assist another person"',
  },
  {
    title: "Location as object",
    rule: "same",
    example:
      'a place receiving the action counts as an item: "a person clean a place" = "a person clean something"',
  },
  {
    title: "Multiple actions",
    rule: "same",
    example:
      'judge by the key action, the one most of the cluster describes: in "a person take something and leave", focus "leave" when the cluster is about leaving',
  },
  {
    title: "Continuous vs. simple tense",
    rule: "same",
    example: '"a person be go home" = "a person go home"',
  },
];
