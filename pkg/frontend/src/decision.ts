/** Decision-panel logic, kept DOM-free so it is testable and reusable.
 *
 * A plan whose rehearsal did not complete (or never ran) needs an explicit
 * override checkbox before approve is allowed. A 409 means someone decided
 * first: the panel refreshes the pending list so the earlier decision shows.
 */

import type { ApiClient } from "./api.js";
import type { PlanDoc } from "./types.js";

export type SubmitOutcome =
  | { kind: "applied"; plan: PlanDoc }
  | { kind: "conflict"; plans: PlanDoc[] }
  | { kind: "rejected-input"; reason: string }
  | { kind: "error"; message: string };

export function needsOverride(plan: PlanDoc): boolean {
  return plan.rehearsal === null || !plan.rehearsal.completed;
}

export function canSubmit(
  plan: PlanDoc,
  verdict: "approve" | "reject",
  actor: string,
  overrideChecked: boolean,
): { ok: boolean; reason: string } {
  if (plan.status !== "awaiting-decision") {
    return { ok: false, reason: `plan is ${plan.status}` };
  }
  if (!actor.trim()) {
    return { ok: false, reason: "actor name required" };
  }
  if (verdict === "approve" && needsOverride(plan) && !overrideChecked) {
    return { ok: false, reason: "rehearsal incomplete: override required" };
  }
  return { ok: true, reason: "" };
}

export async function submitDecision(
  api: ApiClient,
  plan: PlanDoc,
  verdict: "approve" | "reject",
  actor: string,
  overrideChecked: boolean,
): Promise<SubmitOutcome> {
  const gate = canSubmit(plan, verdict, actor, overrideChecked);
  if (!gate.ok) {
    return { kind: "rejected-input", reason: gate.reason };
  }
  const result = await api.decide(plan.id, verdict, actor.trim());
  if (result.status === 200 && result.plan) {
    return { kind: "applied", plan: result.plan };
  }
  if (result.status === 409) {
    const plans = await api.pending();
    return { kind: "conflict", plans };
  }
  return { kind: "error", message: result.error ?? `HTTP ${result.status}` };
}
