/**
 * Report schema identification.
 *
 * Every report names itself on its first line: CSV files start with
 * `# schema=hydralab.<kind>.v<version>` and JSONL files with a JSON object
 * holding the same tag under "schema". Plot scripts refuse any kind or
 * version they were not written for, so a schema bump can never be
 * silently misread.
 */

export const KNOWN_KINDS = [
  "hydra",
  "trace",
  "gks",
  "det_lb",
  "rand_lb",
  "code",
] as const;

export type ReportKind = (typeof KNOWN_KINDS)[number];

export const SUPPORTED_VERSION = 1;

export interface ReportTag {
  kind: ReportKind;
  version: number;
}

const TAG_RE = /^hydralab\.([a-z_]+)\.v(\d+)$/;

/** Parse `hydralab.<kind>.v<version>`; throws on anything unknown. */
export function parseSchemaTag(tag: string): ReportTag {
  const m = TAG_RE.exec(tag);
  if (!m) {
    throw new Error(`unrecognized schema tag: ${JSON.stringify(tag)}`);
  }
  const kind = m[1] as string;
  const version = Number(m[2]);
  if (!(KNOWN_KINDS as readonly string[]).includes(kind)) {
    throw new Error(`unknown report kind: ${kind}`);
  }
  if (version !== SUPPORTED_VERSION) {
    throw new Error(
      `unsupported schema version v${version} for ${kind} ` +
        `(this tool reads v${SUPPORTED_VERSION})`,
    );
  }
  return { kind: kind as ReportKind, version };
}

/** Extract the tag from a report's first line, CSV or JSONL flavour. */
export function tagFromFirstLine(line: string): ReportTag {
  if (line.startsWith("# schema=")) {
    return parseSchemaTag(line.slice("# schema=".length).trim());
  }
  if (line.startsWith("{")) {
    let obj: unknown;
    try {
      obj = JSON.parse(line);
    } catch {
      throw new Error("first line is neither a schema comment nor JSON");
    }
    const tag = (obj as Record<string, unknown>)["schema"];
    if (typeof tag !== "string") {
      throw new Error("JSONL header line carries no schema string");
    }
    return parseSchemaTag(tag);
  }
  throw new Error("report does not start with a schema line");
}
