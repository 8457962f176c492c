/** REST client. The dashboard writes nothing except decision POSTs. */

import type { PlanDoc, StateDoc } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface DecisionResult {
  status: number;
  plan: PlanDoc | null;
  error: string | null;
}

export class ApiClient {
  constructor(
    readonly base: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  async state(): Promise<StateDoc> {
    const resp = await this.fetchImpl(`${this.base}/api/state`);
    return (await resp.json()) as StateDoc;
  }

  async pending(): Promise<PlanDoc[]> {
    const resp = await this.fetchImpl(`${this.base}/api/pending`);
    const doc = (await resp.json()) as { pending: PlanDoc[] };
    return doc.pending;
  }

  async decide(planId: string, verdict: "approve" | "reject", actor: string): Promise<DecisionResult> {
    const resp = await this.fetchImpl(`${this.base}/api/pending/${planId}/decision`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ verdict, actor }),
    });
    const body = (await resp.json()) as { plan?: PlanDoc; error?: string };
    return {
      status: resp.status,
      plan: body.plan ?? null,
      error: body.error ?? null,
    };
  }
}
