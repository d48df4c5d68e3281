// Replays the recorded API transcript. Requests are matched by method, path
// and query; bodies must deep-equal the recorded ones; each endpoint serves
// its recorded responses in order and repeats the last one afterwards (a
// re-issued GET of unchanged state returns the same bytes).

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { FetchLike } from "../src/api.js";

export interface RecordedCall {
  method: string;
  path: string;
  params: Record<string, string> | null;
  body: unknown;
  response: unknown;
}

export interface Transcript {
  session_id: string;
  reload_from: number;
  calls: RecordedCall[];
}

export function loadTranscript(): Transcript {
  const here = dirname(fileURLToPath(import.meta.url));
  return JSON.parse(readFileSync(join(here, "fixtures", "transcript.json"), "utf8"));
}

function canonical(value: unknown): string {
  if (Array.isArray(value)) return `[${value.map(canonical).join(",")}]`;
  if (value !== null && typeof value === "object") {
    const entries = Object.entries(value as Record<string, unknown>)
      .sort(([a], [b]) => (a < b ? -1 : 1))
      .map(([k, v]) => `${JSON.stringify(k)}:${canonical(v)}`);
    return `{${entries.join(",")}}`;
  }
  return JSON.stringify(value);
}

function keyOf(method: string, path: string, params: Record<string, string> | null): string {
  const query = params
    ? Object.entries(params)
        .sort(([a], [b]) => (a < b ? -1 : 1))
        .map(([k, v]) => `${k}=${v}`)
        .join("&")
    : "";
  return `${method.toUpperCase()} ${path}?${query}`;
}

interface PlannedFailure {
  method: string;
  pathIncludes: string;
  status: number;
  detail: string;
}

export class FakeServer {
  private readonly queues = new Map<string, RecordedCall[]>();
  private readonly failures: PlannedFailure[] = [];
  requestCount = 0;

  constructor(calls: RecordedCall[]) {
    for (const call of calls) {
      const key = keyOf(call.method, call.path, call.params);
      const queue = this.queues.get(key) ?? [];
      queue.push(call);
      this.queues.set(key, queue);
    }
  }

  failNext(method: string, pathIncludes: string, status: number, detail: string): void {
    this.failures.push({ method, pathIncludes, status, detail });
  }

  fetch: FetchLike = async (input, init) => {
    this.requestCount += 1;
    const method = (init?.method ?? "GET").toUpperCase();
    const url = new URL(input, "http://fake.test");
    const entries = Object.fromEntries(url.searchParams.entries());
    const params = Object.keys(entries).length > 0 ? entries : null;

    const failureIdx = this.failures.findIndex(
      (f) => f.method === method && url.pathname.includes(f.pathIncludes),
    );
    if (failureIdx >= 0) {
      const failure = this.failures.splice(failureIdx, 1)[0];
      return new Response(JSON.stringify({ detail: failure.detail }), {
        status: failure.status,
        headers: { "content-type": "application/json" },
      });
    }

    const key = keyOf(method, url.pathname, params);
    const queue = this.queues.get(key);
    if (!queue || queue.length === 0) {
      throw new Error(`no recorded call matches ${key}`);
    }
    const call = queue.length > 1 ? queue.shift()! : queue[0];
    if (call.body !== null && call.body !== undefined) {
      const sent = init?.body ? JSON.parse(init.body as string) : undefined;
      if (canonical(sent) !== canonical(call.body)) {
        throw new Error(
          `request body drift for ${key}:\n sent     ${canonical(sent)}\n recorded ${canonical(call.body)}`,
        );
      }
    }
    return new Response(JSON.stringify(call.response), {
      status: 200,
      headers: { "content-type": "application/json" },
    });
  };
}
