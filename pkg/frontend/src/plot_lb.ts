/**
 * Chart and summary table for the lower-bound reports.
 *
 *   node dist/plot_lb.js --in det.csv  --outdir out/
 *   node dist/plot_lb.js --in rand.jsonl --outdir out/
 *
 * A det_lb report (CSV) plots each algorithm's measured cost against the
 * 2^k - 1 floor. A rand_lb report (JSONL) plots the measured herding cost
 * against the analytic (k/32)*H(m-1) curve for its code size m. Exact
 * numerators and denominators from the report are echoed verbatim in the
 * summary table.
 *
 * Exit codes: 0 clean, 1 when any row is uncertified or broke a Confine
 * inequality (still plotted, annotated), 2 on unusable input.
 */

import { mkdir, readFile, writeFile } from "fs/promises";
import path from "path";
import { pathToFileURL } from "url";

import { csvLine, readCsvReport, readJsonlReport } from "./csv.js";
import { Annotation, lineChart, Series } from "./svg.js";

interface Args {
  input: string;
  outdir: string;
}

function parseArgs(argv: string[]): Args {
  let input: string | undefined;
  let outdir: string | undefined;
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === "--in") input = argv[++i];
    else if (argv[i] === "--outdir") outdir = argv[++i];
    else throw new Error(`unknown argument: ${argv[i]}`);
  }
  if (!input || !outdir) {
    throw new Error("usage: plot_lb --in <report> --outdir <dir>");
  }
  return { input, outdir };
}

function harmonic(n: number): number {
  let h = 0;
  for (let i = 1; i <= n; i++) h += 1 / i;
  return h;
}

interface Rendered {
  chart: string;
  table: string;
  badRows: number;
  empty: boolean;
}

function renderDet(rows: ReturnType<typeof readCsvReport>["rows"]): Rendered {
  const ks = [...new Set(rows.map((r) => r.value["k"] as number))].sort(
    (a, b) => a - b,
  );
  const algorithms = [...new Set(rows.map((r) => String(r.value["algorithm"])))];
  const kIndex = new Map(ks.map((k, i) => [k, i]));

  const tableLines = [
    csvLine([
      "k",
      "algorithm",
      "cost_num",
      "cost_den",
      "floor",
      "adversary_cost",
      "certified",
    ]),
  ];
  const colors = ["#1f77b4", "#ff7f0e", "#9467bd", "#8c564b"];
  const series: Series[] = algorithms.map((name, i) => ({
    label: name,
    values: ks.map(() => null as number | null),
    color: colors[i % colors.length]!,
  }));
  const annotations: Annotation[] = [];
  let badRows = 0;

  rows.forEach((row) => {
    const k = row.value["k"] as number;
    const i = kIndex.get(k)!;
    const cost =
      (row.value["algorithm_cost_num"] as number) /
      (row.value["algorithm_cost_den"] as number);
    const si = algorithms.indexOf(String(row.value["algorithm"]));
    series[si]!.values[i] = cost;
    tableLines.push(
      csvLine([
        row.raw["k"]!,
        row.raw["algorithm"]!,
        row.raw["algorithm_cost_num"]!,
        row.raw["algorithm_cost_den"]!,
        2 ** k - 1,
        row.raw["adversary_cost"]!,
        row.raw["certified"]!,
      ]),
    );
    if (row.value["certified"] !== true) {
      badRows++;
      annotations.push({ index: i, y: cost, text: "uncertified" });
    }
  });
  series.push({
    label: "floor 2^k-1",
    values: ks.map((k) => 2 ** k - 1),
    color: "#2ca02c",
    dash: "6 4",
    marker: false,
  });

  const chart = lineChart({
    title: "penalizer cost per algorithm vs the 2^k-1 floor",
    xLabel: "k",
    yLabel: "cost",
    xTicks: ks.map((k) => `k=${k}`),
    series,
    annotations,
    note:
      rows.length === 0
        ? "empty report"
        : badRows > 0
          ? `${badRows} uncertified row(s)`
          : undefined,
  });
  return {
    chart,
    table: tableLines.join("\n") + "\n",
    badRows,
    empty: rows.length === 0,
  };
}

function renderRand(records: Record<string, unknown>[]): Rendered {
  const tableLines = [
    csvLine([
      "k",
      "m",
      "measured_num",
      "measured_den",
      "bound_num",
      "bound_den",
      "analytic",
      "adversary_cost",
      "all_ok",
    ]),
  ];
  const annotations: Annotation[] = [];
  let badRows = 0;
  const measured: (number | null)[] = [];
  const analytic: (number | null)[] = [];

  records.forEach((rec, i) => {
    const k = rec["k"] as number;
    const m = rec["m"] as number;
    const meas =
      (rec["total_measured_num"] as number) /
      (rec["total_measured_den"] as number);
    const curve = (k / 32) * harmonic(m - 1);
    measured.push(meas);
    analytic.push(curve);
    tableLines.push(
      csvLine([
        k,
        m,
        String(rec["total_measured_num"]),
        String(rec["total_measured_den"]),
        String(rec["total_bound_num"]),
        String(rec["total_bound_den"]),
        String(curve),
        String(rec["adversary_cost"]),
        String(rec["all_ok"]),
      ]),
    );
    if (rec["all_ok"] !== true) {
      badRows++;
      annotations.push({ index: i, y: meas, text: "inequality failed" });
    }
  });

  const chart = lineChart({
    title: "herding cost vs the analytic (k/32)*H(m-1) curve",
    xLabel: "k",
    yLabel: "cost",
    xTicks: records.map((r) => `k=${r["k"]}`),
    series: [
      { label: "measured", values: measured, color: "#1f77b4" },
      {
        label: "(k/32)*H(m-1)",
        values: analytic,
        color: "#2ca02c",
        dash: "6 4",
        marker: false,
      },
    ],
    annotations,
    note:
      records.length === 0
        ? "empty report"
        : badRows > 0
          ? `${badRows} failed row(s)`
          : undefined,
  });
  return {
    chart,
    table: tableLines.join("\n") + "\n",
    badRows,
    empty: records.length === 0,
  };
}

export async function run(argv: string[]): Promise<number> {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 2;
  }

  let text: string;
  try {
    text = await readFile(args.input, "utf-8");
  } catch (err) {
    console.error(
      `cannot read report: ${err instanceof Error ? err.message : err}`,
    );
    return 2;
  }

  let rendered: Rendered;
  try {
    if (text.startsWith("# schema=")) {
      const report = readCsvReport(text);
      if (report.tag.kind !== "det_lb") {
        console.error(`expected det_lb or rand_lb, got ${report.tag.kind}`);
        return 2;
      }
      rendered = renderDet(report.rows);
    } else {
      const report = readJsonlReport(text);
      if (report.tag.kind !== "rand_lb") {
        console.error(`expected det_lb or rand_lb, got ${report.tag.kind}`);
        return 2;
      }
      rendered = renderRand(report.records);
    }
  } catch (err) {
    console.error(
      `cannot parse report: ${err instanceof Error ? err.message : err}`,
    );
    return 2;
  }

  await mkdir(args.outdir, { recursive: true });
  await writeFile(path.join(args.outdir, "lb_chart.svg"), rendered.chart);
  await writeFile(path.join(args.outdir, "lb_summary.csv"), rendered.table);
  process.stdout.write(rendered.table);

  if (rendered.empty) {
    console.error("warning: report has no rows, wrote an empty chart");
    return 0;
  }
  if (rendered.badRows > 0) {
    console.error(`error: ${rendered.badRows} row(s) failed their checks`);
    return 1;
  }
  return 0;
}

if (
  process.argv[1] &&
  import.meta.url === pathToFileURL(process.argv[1]).href
) {
  run(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
