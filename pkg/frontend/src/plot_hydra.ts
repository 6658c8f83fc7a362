/**
 * Chart and summary table for a hydra report.
 *
 *   node dist/plot_hydra.js --in hydra.csv --outdir out/
 *
 * Writes out/chart.svg (per-tree mean and max cost with the analytic
 * bound overlaid) and out/summary.csv, and prints the table to stdout.
 * The summary echoes the report's own cell text for max cost and bound,
 * so those columns match the report to full precision.
 *
 * Exit codes: 0 clean, 1 when any row carries a failed check or a cost
 * above its bound (the chart is still written, with the row annotated),
 * 2 on unusable input.
 */

import { mkdir, readFile, writeFile } from "fs/promises";
import path from "path";
import { pathToFileURL } from "url";

import { csvLine, readCsvReport, ReportRow } from "./csv.js";
import { Annotation, lineChart } from "./svg.js";

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
    throw new Error("usage: plot_hydra --in <report.csv> --outdir <dir>");
  }
  return { input, outdir };
}

interface TreeSummary {
  label: string;
  rows: ReportRow[];
  meanCost: number;
  maxRow: ReportRow;
  violations: number;
}

function summarize(rows: ReportRow[]): TreeSummary[] {
  const order: string[] = [];
  const grouped = new Map<string, ReportRow[]>();
  for (const row of rows) {
    const label = String(row.value["tree"]);
    if (!grouped.has(label)) {
      grouped.set(label, []);
      order.push(label);
    }
    grouped.get(label)!.push(row);
  }
  return order.map((label) => {
    const group = grouped.get(label)!;
    let sum = 0;
    let maxRow = group[0]!;
    let violations = 0;
    for (const row of group) {
      const cost = row.value["cost"] as number;
      sum += cost;
      if (cost > (maxRow.value["cost"] as number)) maxRow = row;
      if (row.value["checks_ok"] !== true || row.value["bound_ok"] !== true) {
        violations++;
      }
    }
    return {
      label,
      rows: group,
      meanCost: sum / group.length,
      maxRow,
      violations,
    };
  });
}

/** `factorial-5` -> `k=5` when the whole report is factorial trees. */
function tickLabels(summaries: TreeSummary[]): string[] {
  const labels = summaries.map((s) => s.label);
  if (labels.every((l) => /^factorial-\d+$/.test(l))) {
    return labels.map((l) => `k=${l.split("-")[1]}`);
  }
  return labels;
}

export async function run(argv: string[]): Promise<number> {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 2;
  }

  let report;
  try {
    report = readCsvReport(await readFile(args.input, "utf-8"));
  } catch (err) {
    console.error(
      `cannot read report: ${err instanceof Error ? err.message : err}`,
    );
    return 2;
  }
  if (report.tag.kind !== "hydra") {
    console.error(`expected a hydra report, got ${report.tag.kind}`);
    return 2;
  }

  await mkdir(args.outdir, { recursive: true });
  const summaries = summarize(report.rows);

  const tableLines = [
    csvLine(["tree", "runs", "mean_cost", "max_cost", "bound", "violations"]),
  ];
  for (const s of summaries) {
    tableLines.push(
      csvLine([
        s.label,
        s.rows.length,
        String(s.meanCost),
        s.maxRow.raw["cost"]!,
        s.maxRow.raw["bound"]!,
        s.violations,
      ]),
    );
  }
  const table = tableLines.join("\n") + "\n";

  const annotations: Annotation[] = [];
  let badRows = 0;
  summaries.forEach((s, i) => {
    if (s.violations > 0) {
      badRows += s.violations;
      annotations.push({
        index: i,
        y: s.maxRow.value["cost"] as number,
        text: `${s.violations} bound violation(s)`,
      });
    }
  });

  const empty = summaries.length === 0;
  const chart = lineChart({
    title: "fractional cost per tree vs the potential bound",
    xLabel: "tree",
    yLabel: "cost",
    xTicks: tickLabels(summaries),
    series: [
      {
        label: "mean cost",
        values: summaries.map((s) => s.meanCost),
        color: "#1f77b4",
      },
      {
        label: "max cost",
        values: summaries.map((s) => s.maxRow.value["cost"] as number),
        color: "#ff7f0e",
      },
      {
        label: "bound 4hH(L)+h",
        values: summaries.map((s) => s.maxRow.value["bound"] as number),
        color: "#2ca02c",
        dash: "6 4",
        marker: false,
      },
    ],
    annotations,
    note: empty
      ? "empty report"
      : badRows > 0
        ? `${badRows} row(s) violate their bound`
        : undefined,
  });

  await writeFile(path.join(args.outdir, "chart.svg"), chart);
  await writeFile(path.join(args.outdir, "summary.csv"), table);
  process.stdout.write(table);

  if (empty) {
    console.error("warning: report has no rows, wrote an empty chart");
    return 0;
  }
  if (badRows > 0) {
    console.error(`error: ${badRows} row(s) violate their bound`);
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
