// Wire protocol v1: one JSON document per line, UTF-8. Every request gets
// exactly one response with a matching id, carrying either result or error.

export const PROTOCOL_VERSION = 1;

export interface StatementRecord {
  text: string;
  truth: boolean;
}

export interface Request {
  id: number | string;
  op: string;
  [key: string]: unknown;
}

export interface ErrorBody {
  class: string;
  message: string;
}

export interface Response {
  id: number | string | null;
  result?: unknown;
  error?: ErrorBody;
}

export function serializeResponse(res: Response): string {
  return JSON.stringify(res) + '\n';
}

export function parseRequest(line: string): Request {
  let doc: unknown;
  try {
    doc = JSON.parse(line);
  } catch {
    throw new ProtocolViolation(`not a JSON document: ${line.slice(0, 120)}`);
  }
  if (typeof doc !== 'object' || doc === null || Array.isArray(doc)) {
    throw new ProtocolViolation('request must be a JSON object');
  }
  const req = doc as Record<string, unknown>;
  if (typeof req.op !== 'string') {
    throw new ProtocolViolation('request is missing a string "op"');
  }
  if (typeof req.id !== 'number' && typeof req.id !== 'string') {
    throw new ProtocolViolation('request is missing an "id"');
  }
  return req as unknown as Request;
}

export class ProtocolViolation extends Error {}

export function ok(id: number | string, result: unknown): Response {
  return { id, result };
}

export function fail(id: number | string | null, exc: unknown): Response {
  const err = exc instanceof Error ? exc : new Error(String(exc));
  return { id, error: { class: err.constructor.name, message: err.message } };
}

export function asStatements(value: unknown): StatementRecord[] {
  if (!Array.isArray(value)) {
    throw new ProtocolViolation('"statements" must be an array');
  }
  return value.map((row, i) => {
    if (typeof row !== 'object' || row === null) {
      throw new ProtocolViolation(`statement ${i} is not an object`);
    }
    const r = row as Record<string, unknown>;
    if (typeof r.text !== 'string' || typeof r.truth !== 'boolean') {
      throw new ProtocolViolation(`statement ${i} needs string "text" and boolean "truth"`);
    }
    return { text: r.text, truth: r.truth };
  });
}

export function asTexts(value: unknown): string[] {
  if (!Array.isArray(value) || value.some(t => typeof t !== 'string')) {
    throw new ProtocolViolation('"texts" must be an array of strings');
  }
  return value as string[];
}
