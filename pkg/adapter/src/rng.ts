// Seeded PRNG utilities. Everything the stub emits must be a pure function
// of (seed, utt_id, parameters), so runs are reproducible across machines.

/** FNV-1a 32-bit hash, used to fold strings into numeric seeds. */
export function fnv1a(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193);
  }
  return hash >>> 0;
}

/** mulberry32: small, fast, good-enough PRNG with a 32-bit state. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export interface Rng {
  next(): number;
  normal(): number;
  int(maxExclusive: number): number;
}

/** Deterministic generator derived from a numeric seed plus string parts. */
export function makeRng(seed: number, ...parts: string[]): Rng {
  let folded = seed >>> 0;
  for (const part of parts) {
    folded = (Math.imul(folded, 0x9e3779b1) ^ fnv1a(part)) >>> 0;
  }
  const next = mulberry32(folded);
  let spare: number | null = null;
  return {
    next,
    normal(): number {
      // Box-Muller with caching of the second deviate.
      if (spare !== null) {
        const out = spare;
        spare = null;
        return out;
      }
      let u = 0;
      let v = 0;
      while (u === 0) u = next();
      while (v === 0) v = next();
      const mag = Math.sqrt(-2.0 * Math.log(u));
      spare = mag * Math.sin(2.0 * Math.PI * v);
      return mag * Math.cos(2.0 * Math.PI * v);
    },
    int(maxExclusive: number): number {
      return Math.floor(next() * maxExclusive);
    },
  };
}
