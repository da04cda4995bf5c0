import { readFileSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';

import type { FetchLike } from '../src/api.js';

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), 'fixtures');

export function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(FIXTURES, name), 'utf-8')) as T;
}

export interface RecordedCall {
  url: string;
  method: string;
  body: unknown;
}

export type RouteTable = Record<
  string,
  { status?: number; payload: unknown } | ((body: unknown) => { status?: number; payload: unknown })
>;

/** fetch stub over a "<METHOD> <path>" route table, recording every call. */
export function fakeFetch(routes: RouteTable, calls: RecordedCall[] = []): FetchLike {
  return async (url: string, init?: RequestInit) => {
    const method = init?.method ?? 'GET';
    const body = init?.body ? JSON.parse(init.body as string) : null;
    calls.push({ url, method, body });
    const route = routes[`${method} ${url}`];
    if (!route) {
      return new Response(JSON.stringify({ detail: `no route ${method} ${url}` }), {
        status: 404,
        headers: { 'Content-Type': 'application/json' },
      });
    }
    const { status = 200, payload } = typeof route === 'function' ? route(body) : route;
    return new Response(JSON.stringify(payload), {
      status,
      headers: { 'Content-Type': 'application/json' },
    });
  };
}
