export interface Scale {
  toPx(v: number): number;
  ticks: number[];
  domain: [number, number];
}

/** Linear scale with tick steps of 1, 2 or 5 times a power of ten. */
export function linearScale(min: number, max: number, pxA: number, pxB: number): Scale {
  if (min === max) {
    min -= 1;
    max += 1;
  }
  const span = max - min;
  const rawStep = span / 5;
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = mag;
  for (const mult of [1, 2, 5, 10]) {
    if (mult * mag >= rawStep) {
      step = mult * mag;
      break;
    }
  }
  const lo = Math.ceil(min / step) * step;
  const ticks: number[] = [];
  for (let v = lo; v <= max + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return {
    toPx: (v) => pxA + ((v - min) / span) * (pxB - pxA),
    ticks,
    domain: [min, max],
  };
}

/** Log10 scale; ticks at every decade (thinned to at most ~10 labels). */
export function logScale(min: number, max: number, pxA: number, pxB: number): Scale {
  if (!(min > 0) || !(max > 0)) {
    throw new Error(`log scale requires positive bounds, got [${min}, ${max}]`);
  }
  if (min === max) {
    min /= 10;
    max *= 10;
  }
  const lmin = Math.log10(min);
  const lmax = Math.log10(max);
  const eLo = Math.ceil(lmin - 1e-9);
  const eHi = Math.floor(lmax + 1e-9);
  const every = Math.max(1, Math.ceil((eHi - eLo + 1) / 10));
  const ticks: number[] = [];
  for (let e = eLo; e <= eHi; e += every) {
    ticks.push(Math.pow(10, e));
  }
  return {
    toPx: (v) => pxA + ((Math.log10(v) - lmin) / (lmax - lmin)) * (pxB - pxA),
    ticks,
    domain: [min, max],
  };
}

/** Deterministic short label for an axis tick. */
export function tickLabel(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) {
    return v.toExponential(0).replace("e+", "e");
  }
  return String(Number(v.toPrecision(6)));
}
