/** Refinement dashboard: the advisor's recommendations for the selected
 * state, each with its rationale and references. Recommendations that
 * carry a transition get an apply button; applying offers a retrain,
 * whose background job is polled until it finishes. */

import type { ApiClient } from "../api.js";
import { clear, el } from "../dom.js";
import type { ViewStore } from "../store.js";

const POLL_MS = 300;

export function renderRefinement(api: ApiClient, store: ViewStore): HTMLElement {
  const root = el("section", { class: "dashboard refinement" });

  const pollJob = async (jobId: string, progress: HTMLElement): Promise<void> => {
    for (;;) {
      const job = await api.trainStatus(jobId);
      progress.textContent = `training: ${job.status}`;
      if (job.status === "done") {
        progress.textContent = `training done → ${job.state_id} (run ${job.run_id})`;
        store.select({ stateId: job.state_id ?? null, runId: job.run_id ?? null });
        return;
      }
      if (job.status === "failed") {
        progress.textContent = `training failed: ${job.message ?? "unknown error"}`;
        return;
      }
      await new Promise((resolve) => setTimeout(resolve, POLL_MS));
    }
  };

  let renderToken = 0;

  const update = async () => {
    // Only the latest render commits; overlapping refreshes are dropped.
    const token = ++renderToken;
    const children: Node[] = [];
    const commit = () => {
      if (token !== renderToken) return;
      clear(root).append(...children);
    };
    const states = await api.listStates();
    if (states.length === 0) {
      children.push(el("p", { class: "empty" }, ["No model states yet — train one first."]));
      commit();
      return;
    }
    const stateId = store.selections.stateId ?? states[states.length - 1]!.state_id;
    const recommendations = await api.recommendations(stateId, store.selections.runId ?? undefined);
    children.push(el("h3", {}, [`Recommendations for ${stateId}`]));
    if (recommendations.length === 0) {
      children.push(el("p", { class: "empty" }, ["Nothing to recommend — the advisor found no evidence."]));
    }
    for (const rec of recommendations) {
      const progress = el("p", { class: "job-progress" });
      const card = el("div", { class: `rec-card severity-${rec.severity}`, "data-rule": rec.rule_id }, [
        el("h4", {}, [`${rec.rule_id}: ${rec.title}`]),
        el("span", { class: "severity" }, [rec.severity]),
        el("p", { class: "rationale" }, [rec.rationale]),
        el("ul", { class: "references" }, rec.references.map((ref) => el("li", {}, [ref]))),
      ]);
      if (rec.transition) {
        const transition = rec.transition;
        card.append(
          el("button", {
            class: "apply-rec",
            type: "button",
            onclick: async () => {
              const applied = await api.applyTransition(stateId, transition);
              progress.textContent = `applied → new state ${applied.state_id}`;
              card.append(
                el("button", {
                  class: "retrain",
                  type: "button",
                  onclick: async () => {
                    const { job_id } = await api.startTraining(applied.state_id);
                    await pollJob(job_id, progress);
                  },
                }, [`retrain ${applied.state_id}`]),
              );
            },
          }, ["apply"]),
        );
      }
      card.append(progress);
      children.push(card);
    }

    const list = el("ul", { class: "state-list" });
    for (const state of states) {
      list.append(
        el("li", { "data-state": state.state_id }, [
          state.parent
            ? `${state.state_id} ← ${state.parent} (${state.transition ?? "?"})`
            : state.state_id,
        ]),
      );
    }
    children.push(el("h3", {}, ["Model states"]), list);
    commit();
  };

  store.subscribe(() => {
    if (store.dashboard === "refinement") void update();
  });
  void update();
  return root;
}
