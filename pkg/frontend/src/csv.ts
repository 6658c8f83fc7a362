/**
 * Readers for the harness report files.
 *
 * The CSV cell grammar is the exact mirror of what the harness writes:
 * empty cell = null, `true`/`false` = booleans, an optional sign plus
 * digits = integer, anything float-parseable = float, everything else is
 * a plain string (the writer never emits strings containing commas).
 *
 * Each parsed row keeps the raw cell text alongside the typed value.
 * Summaries echo raw text wherever a report number is reproduced, so no
 * float formatting round-trip can lose precision; typed values are only
 * used for comparisons and chart geometry.
 */

import { ReportTag, tagFromFirstLine } from "./schema.js";

export type CellValue = null | boolean | number | string;

export interface ReportRow {
  /** column -> cell text exactly as written */
  raw: Record<string, string>;
  /** column -> typed view of the same cell */
  value: Record<string, CellValue>;
}

export interface CsvReport {
  tag: ReportTag;
  columns: string[];
  rows: ReportRow[];
}

export interface JsonlReport {
  tag: ReportTag;
  records: Record<string, unknown>[];
}

const INT_RE = /^-?\d+$/;
const FLOAT_RE = /^-?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$/;

export function parseCell(raw: string): CellValue {
  if (raw === "") return null;
  if (raw === "true") return true;
  if (raw === "false") return false;
  if (INT_RE.test(raw) || FLOAT_RE.test(raw)) return Number(raw);
  return raw;
}

function splitLines(text: string): string[] {
  const lines = text.split(/\r?\n/);
  while (lines.length > 0 && lines[lines.length - 1] === "") lines.pop();
  return lines;
}

export function readCsvReport(text: string): CsvReport {
  const lines = splitLines(text);
  if (lines.length < 2) {
    throw new Error("CSV report needs a schema line and a header line");
  }
  const tag = tagFromFirstLine(lines[0]!);
  const columns = lines[1]!.split(",");
  const rows: ReportRow[] = [];
  for (let i = 2; i < lines.length; i++) {
    const cells = lines[i]!.split(",");
    if (cells.length !== columns.length) {
      throw new Error(
        `row ${i - 2} has ${cells.length} cells, header has ${columns.length}`,
      );
    }
    const raw: Record<string, string> = {};
    const value: Record<string, CellValue> = {};
    for (let c = 0; c < columns.length; c++) {
      raw[columns[c]!] = cells[c]!;
      value[columns[c]!] = parseCell(cells[c]!);
    }
    rows.push({ raw, value });
  }
  return { tag, columns, rows };
}

export function readJsonlReport(text: string): JsonlReport {
  const lines = splitLines(text);
  if (lines.length < 1) {
    throw new Error("JSONL report is empty");
  }
  const tag = tagFromFirstLine(lines[0]!);
  const records = lines
    .slice(1)
    .map((l) => JSON.parse(l) as Record<string, unknown>);
  return { tag, records };
}

/** Format a CSV output line; summary values must never contain commas. */
export function csvLine(cells: (string | number)[]): string {
  const parts = cells.map((c) => String(c));
  for (const p of parts) {
    if (p.includes(",")) throw new Error(`cell contains a comma: ${p}`);
  }
  return parts.join(",");
}
