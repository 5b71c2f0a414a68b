/** Minimal deterministic SVG helpers; no DOM, plain string assembly. */

export function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Fixed-width float formatting so renders are byte-stable. */
export function fmt(value: number): string {
  if (!Number.isFinite(value)) return "0";
  const text = value.toPrecision(6);
  return text.includes(".")
    ? text.replace(/0+$/, "").replace(/\.$/, "")
    : text;
}

export function attrs(pairs: Record<string, string | number>): string {
  return Object.entries(pairs)
    .map(([key, value]) =>
      ` ${key}="${typeof value === "number" ? fmt(value) : esc(value)}"`)
    .join("");
}

export function tag(name: string, pairs: Record<string, string | number>,
                    body?: string): string {
  const open = `<${name}${attrs(pairs)}`;
  return body === undefined ? `${open}/>` : `${open}>${body}</${name}>`;
}

export function text(x: number, y: number, content: string,
                     extra: Record<string, string | number> = {}): string {
  return tag("text", { x, y, "font-family": "sans-serif", ...extra },
             esc(content));
}

export function polyline(points: Array<[number, number]>,
                         extra: Record<string, string | number>): string {
  const joined = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
  return tag("polyline", { ...extra, fill: "none", points: joined });
}

export function document(width: number, height: number, body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
    `height="${height}" viewBox="0 0 ${width} ${height}">\n` +
    `<rect width="${width}" height="${height}" fill="white"/>\n` +
    body +
    "\n</svg>\n"
  );
}

export interface Scale {
  (value: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number],
                            range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0;
  const scale = ((value: number) =>
    span === 0 ? (r0 + r1) / 2 : r0 + ((value - d0) / span) * (r1 - r0)) as Scale;
  scale.domain = domain;
  return scale;
}

/** Round tick positions covering the domain (about `count` of them). */
export function ticks(domain: [number, number], count = 5): number[] {
  const [lo, hi] = domain;
  if (!(hi > lo)) return [lo];
  const step = Math.pow(10, Math.floor(Math.log10((hi - lo) / count)));
  const refined = (hi - lo) / step > 2 * count ? 5 * step
    : (hi - lo) / step > count ? 2 * step : step;
  const out: number[] = [];
  for (let v = Math.ceil(lo / refined) * refined; v <= hi + 1e-12 * refined;
       v += refined) {
    out.push(Math.abs(v) < refined * 1e-9 ? 0 : v);
  }
  return out;
}

const STOPS: Array<[number, number, number]> = [
  [68, 1, 84],
  [65, 68, 135],
  [42, 120, 142],
  [34, 168, 132],
  [122, 209, 81],
  [253, 231, 37],
];

/** Perceptual dark-to-light color ramp on [0, 1]. */
export function ramp(t: number): string {
  const clamped = Math.min(1, Math.max(0, t));
  const pos = clamped * (STOPS.length - 1);
  const low = Math.min(STOPS.length - 2, Math.floor(pos));
  const frac = pos - low;
  const channel = (c: number) =>
    Math.round(STOPS[low][c] + frac * (STOPS[low + 1][c] - STOPS[low][c]));
  return `rgb(${channel(0)},${channel(1)},${channel(2)})`;
}

export const SERIES_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                              "#ff7f0e", "#8c564b"];
