/**
 * Minimal deterministic SVG line charts.
 *
 * No plotting dependency: the charts are plain strings with evenly spaced
 * categorical x positions and a linear y axis from zero. Rerunning on the
 * same report reproduces the file byte for byte, which the tests rely on.
 */

export interface Series {
  label: string;
  values: (number | null)[];
  color: string;
  /** stroke-dasharray, e.g. "6 4" for analytic bound curves */
  dash?: string;
  marker?: boolean;
}

export interface Annotation {
  index: number;
  y: number;
  text: string;
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  xTicks: string[];
  series: Series[];
  annotations?: Annotation[];
  /** extra line under the title, e.g. an empty-report warning */
  note?: string;
}

const W = 760;
const H = 440;
const M = { left: 70, right: 160, top: 50, bottom: 55 };

function fmt(v: number): string {
  if (v === 0) return "0";
  const s = v.toPrecision(4);
  return s.includes(".") ? s.replace(/\.?0+$/, "") : s;
}

function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function lineChart(spec: ChartSpec): string {
  const plotW = W - M.left - M.right;
  const plotH = H - M.top - M.bottom;
  const n = spec.xTicks.length;
  const xPos = (i: number): number =>
    n <= 1 ? M.left + plotW / 2 : M.left + (plotW * i) / (n - 1);

  let yMax = 0;
  for (const s of spec.series) {
    for (const v of s.values) {
      if (v !== null && v > yMax) yMax = v;
    }
  }
  for (const a of spec.annotations ?? []) {
    if (a.y > yMax) yMax = a.y;
  }
  if (yMax <= 0) yMax = 1;
  yMax *= 1.05;
  const yPos = (v: number): number => M.top + plotH - (plotH * v) / yMax;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" ` +
      `viewBox="0 0 ${W} ${H}" font-family="sans-serif">`,
  );
  parts.push(`<rect width="${W}" height="${H}" fill="white"/>`);
  parts.push(
    `<text x="${W / 2}" y="24" text-anchor="middle" font-size="16">` +
      `${esc(spec.title)}</text>`,
  );
  if (spec.note) {
    parts.push(
      `<text x="${W / 2}" y="42" text-anchor="middle" font-size="12" ` +
        `fill="#b00">${esc(spec.note)}</text>`,
    );
  }

  // frame and gridlines with y tick labels
  parts.push(
    `<rect x="${M.left}" y="${M.top}" width="${plotW}" height="${plotH}" ` +
      `fill="none" stroke="#444"/>`,
  );
  for (let t = 0; t <= 4; t++) {
    const v = (yMax * t) / 4;
    const y = yPos(v);
    if (t > 0) {
      parts.push(
        `<line x1="${M.left}" y1="${y}" x2="${M.left + plotW}" y2="${y}" ` +
          `stroke="#ddd"/>`,
      );
    }
    parts.push(
      `<text x="${M.left - 8}" y="${y + 4}" text-anchor="end" ` +
        `font-size="11">${fmt(v)}</text>`,
    );
  }
  spec.xTicks.forEach((label, i) => {
    const x = xPos(i);
    parts.push(
      `<line x1="${x}" y1="${M.top + plotH}" x2="${x}" ` +
        `y2="${M.top + plotH + 5}" stroke="#444"/>`,
    );
    parts.push(
      `<text x="${x}" y="${M.top + plotH + 20}" text-anchor="middle" ` +
        `font-size="11">${esc(label)}</text>`,
    );
  });
  parts.push(
    `<text x="${M.left + plotW / 2}" y="${H - 12}" text-anchor="middle" ` +
      `font-size="12">${esc(spec.xLabel)}</text>`,
  );
  parts.push(
    `<text x="18" y="${M.top + plotH / 2}" text-anchor="middle" ` +
      `font-size="12" transform="rotate(-90 18 ${M.top + plotH / 2})">` +
      `${esc(spec.yLabel)}</text>`,
  );

  if (n === 0) {
    parts.push(
      `<text x="${M.left + plotW / 2}" y="${M.top + plotH / 2}" ` +
        `text-anchor="middle" font-size="14" fill="#888">` +
        `empty report: nothing to plot</text>`,
    );
  }

  spec.series.forEach((s, si) => {
    const pts: string[] = [];
    s.values.forEach((v, i) => {
      if (v !== null) pts.push(`${xPos(i)},${yPos(v)}`);
    });
    if (pts.length > 1) {
      const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
      parts.push(
        `<polyline points="${pts.join(" ")}" fill="none" ` +
          `stroke="${s.color}" stroke-width="1.8"${dash}/>`,
      );
    }
    if (s.marker ?? true) {
      s.values.forEach((v, i) => {
        if (v !== null) {
          parts.push(
            `<circle cx="${xPos(i)}" cy="${yPos(v)}" r="3" ` +
              `fill="${s.color}"/>`,
          );
        }
      });
    }
    const ly = M.top + 14 + si * 18;
    parts.push(
      `<line x1="${W - M.right + 10}" y1="${ly - 4}" ` +
        `x2="${W - M.right + 34}" y2="${ly - 4}" stroke="${s.color}" ` +
        `stroke-width="1.8"${s.dash ? ` stroke-dasharray="${s.dash}"` : ""}/>`,
    );
    parts.push(
      `<text x="${W - M.right + 40}" y="${ly}" font-size="11">` +
        `${esc(s.label)}</text>`,
    );
  });

  for (const a of spec.annotations ?? []) {
    const x = xPos(a.index);
    const y = yPos(a.y);
    parts.push(
      `<circle cx="${x}" cy="${y}" r="6" fill="none" stroke="#c00" ` +
        `stroke-width="2"/>`,
    );
    parts.push(
      `<text x="${x + 9}" y="${y - 6}" font-size="11" fill="#c00">` +
        `${esc(a.text)}</text>`,
    );
  }

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
