// Rule-based grapheme-to-phoneme conversion into the toolkit's lowercase
// ARPAbet-style inventory. Deliberately simple: digraphs first, then single
// letters, everything else dropped. Good enough for pipeline plumbing and
// fully offline; swap in a real g2p by replacing this module.

export const PHONEME_INVENTORY = [
  "aa", "ae", "ah", "ao", "aw", "ay", "b", "ch", "d", "dh",
  "eh", "er", "ey", "f", "g", "hh", "ih", "iy", "jh", "k",
  "l", "m", "n", "ng", "ow", "oy", "p", "r", "s", "sh",
  "t", "th", "uh", "uw", "v", "w", "y", "z", "zh",
] as const;

const DIGRAPHS: Record<string, string[]> = {
  ch: ["ch"],
  sh: ["sh"],
  th: ["th"],
  ph: ["f"],
  ng: ["ng"],
  ck: ["k"],
  qu: ["k", "w"],
  ee: ["iy"],
  oo: ["uw"],
  ea: ["iy"],
  ou: ["aw"],
  ow: ["ow"],
  oy: ["oy"],
  ai: ["ey"],
  ay: ["ey"],
  au: ["ao"],
  er: ["er"],
  ar: ["aa", "r"],
  or: ["ao", "r"],
};

const SINGLES: Record<string, string[]> = {
  a: ["ae"], b: ["b"], c: ["k"], d: ["d"], e: ["eh"], f: ["f"], g: ["g"],
  h: ["hh"], i: ["ih"], j: ["jh"], k: ["k"], l: ["l"], m: ["m"], n: ["n"],
  o: ["aa"], p: ["p"], q: ["k"], r: ["r"], s: ["s"], t: ["t"], u: ["ah"],
  v: ["v"], w: ["w"], x: ["k", "s"], y: ["y"], z: ["z"],
};

/** Convert one word to phoneme symbols; unknown characters are skipped. */
export function wordToPhonemes(word: string): string[] {
  const lower = word.toLowerCase();
  const out: string[] = [];
  let i = 0;
  while (i < lower.length) {
    const pair = lower.slice(i, i + 2);
    if (pair.length === 2 && DIGRAPHS[pair]) {
      out.push(...DIGRAPHS[pair]);
      i += 2;
      continue;
    }
    const single = SINGLES[lower[i]];
    if (single) out.push(...single);
    i += 1;
  }
  return out;
}

/** Convert a transcript to a flat phoneme sequence. */
export function textToPhonemes(text: string): string[] {
  const out: string[] = [];
  for (const word of text.split(/\s+/)) {
    if (word) out.push(...wordToPhonemes(word));
  }
  return out;
}
