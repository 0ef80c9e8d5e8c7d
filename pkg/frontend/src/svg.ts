/** Minimal deterministic SVG assembly: fixed styles, fixed ordering. */

export const WIDTH = 760;
export const HEIGHT = 460;
export const MARGIN = { left: 78, right: 24, top: 42, bottom: 54 };

export const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd",
  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

export const px = (v: number) => v.toFixed(2);

export function open(): string[] {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
  ];
}

export function close(parts: string[]): string {
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

export function title(parts: string[], text: string): void {
  parts.push(
    `<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-size="15">${esc(text)}</text>`,
  );
}

export function plotFrame(parts: string[]): void {
  const { left, right, top, bottom } = MARGIN;
  parts.push(
    `<rect x="${left}" y="${top}" width="${WIDTH - left - right}" height="${HEIGHT - top - bottom}" fill="none" stroke="#333" stroke-width="1"/>`,
  );
}

export function xTick(parts: string[], xPx: number, label: string): void {
  const y0 = HEIGHT - MARGIN.bottom;
  parts.push(
    `<line x1="${px(xPx)}" y1="${MARGIN.top}" x2="${px(xPx)}" y2="${y0}" stroke="#ddd" stroke-width="0.5"/>`,
    `<line x1="${px(xPx)}" y1="${y0}" x2="${px(xPx)}" y2="${y0 + 5}" stroke="#333"/>`,
    `<text x="${px(xPx)}" y="${y0 + 18}" text-anchor="middle" font-size="11">${esc(label)}</text>`,
  );
}

export function yTick(parts: string[], yPx: number, label: string): void {
  const x0 = MARGIN.left;
  parts.push(
    `<line x1="${x0}" y1="${px(yPx)}" x2="${WIDTH - MARGIN.right}" y2="${px(yPx)}" stroke="#ddd" stroke-width="0.5"/>`,
    `<line x1="${x0 - 5}" y1="${px(yPx)}" x2="${x0}" y2="${px(yPx)}" stroke="#333"/>`,
    `<text x="${x0 - 8}" y="${px(yPx + 4)}" text-anchor="end" font-size="11">${esc(label)}</text>`,
  );
}

export function axisLabels(parts: string[], xLabel: string, yLabel: string): void {
  parts.push(
    `<text x="${(MARGIN.left + WIDTH - MARGIN.right) / 2}" y="${HEIGHT - 14}" text-anchor="middle" font-size="13">${esc(xLabel)}</text>`,
    `<text x="20" y="${(MARGIN.top + HEIGHT - MARGIN.bottom) / 2}" text-anchor="middle" font-size="13" transform="rotate(-90 20 ${(MARGIN.top + HEIGHT - MARGIN.bottom) / 2})">${esc(yLabel)}</text>`,
  );
}

export function polyline(parts: string[], pts: string, color: string): void {
  parts.push(
    `<path d="${pts}" fill="none" stroke="${color}" stroke-width="1.6"/>`,
  );
}

export function band(parts: string[], path: string, color: string): void {
  parts.push(`<path d="${path}" fill="${color}" fill-opacity="0.15" stroke="none"/>`);
}

export function bar(parts: string[], x: number, y: number, w: number, h: number,
                    color: string): void {
  parts.push(
    `<rect x="${px(x)}" y="${px(y)}" width="${px(w)}" height="${px(h)}" fill="${color}" fill-opacity="0.85"/>`,
  );
}

export function legend(parts: string[], labels: string[], colors: string[]): void {
  const x0 = WIDTH - MARGIN.right - 170;
  let y = MARGIN.top + 16;
  for (let i = 0; i < labels.length; i++) {
    parts.push(
      `<line x1="${x0}" y1="${y - 4}" x2="${x0 + 26}" y2="${y - 4}" stroke="${colors[i]}" stroke-width="2"/>`,
      `<text x="${x0 + 32}" y="${y}" font-size="12">${esc(labels[i])}</text>`,
    );
    y += 17;
  }
}
