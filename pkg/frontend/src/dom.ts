// Thin DOM binding over the pure view model.

import { RUB_STEPS } from "./protocol.js";
import { UiSessionView, elapsedMs } from "./view.js";

export interface PageElements {
  phase: HTMLElement;
  instruction: HTMLElement;
  illustration: HTMLImageElement;
  guideline: HTMLElement; // container for per-step markers
  dispenseOverlay: HTMLElement;
  handsOverlay: HTMLElement;
  repeatBanner: HTMLElement;
  elapsed: HTMLElement;
  summary: HTMLElement;
  errors: HTMLElement;
}

export function lookupElements(root: Document): PageElements {
  const get = (id: string) => {
    const el = root.getElementById(id);
    if (!el) throw new Error(`missing page element #${id}`);
    return el;
  };
  return {
    phase: get("phase"),
    instruction: get("instruction"),
    illustration: get("illustration") as HTMLImageElement,
    guideline: get("guideline"),
    dispenseOverlay: get("dispense-overlay"),
    handsOverlay: get("hands-overlay"),
    repeatBanner: get("repeat-banner"),
    elapsed: get("elapsed"),
    summary: get("summary"),
    errors: get("errors"),
  };
}

const PHASE_LABELS: Record<string, string> = {
  await_hands: "Show your hands to the camera",
  await_dispense: "Take sanitizer from the dispenser",
  rub_step: "Follow the current step",
  repeat_cycle: "Repeat the remaining steps",
  complete: "Session complete",
};

export function render(view: UiSessionView, els: PageElements): void {
  els.phase.textContent = PHASE_LABELS[view.phase] ?? view.phase;
  els.instruction.textContent = view.instruction ?? "";
  if (view.illustration) {
    els.illustration.src = view.illustration;
    els.illustration.hidden = false;
  } else {
    els.illustration.hidden = true;
  }

  els.guideline.replaceChildren(
    ...RUB_STEPS.map((step) => {
      const marker = document.createElement("span");
      marker.className = "step-marker";
      marker.dataset.step = String(step);
      marker.textContent = String(step);
      if (view.passed[step]) marker.classList.add("passed");
      if (view.targetStep === step) marker.classList.add("active");
      if (view.repeatQueue.includes(step)) marker.classList.add("queued");
      return marker;
    }),
  );

  els.dispenseOverlay.hidden = !view.dispensePrompt;
  els.handsOverlay.hidden = !view.handsPrompt;

  if (view.repeatBanner.length > 0) {
    els.repeatBanner.hidden = false;
    els.repeatBanner.textContent = `Repeat at end of cycle: steps ${view.repeatBanner.join(", ")}`;
  } else {
    els.repeatBanner.hidden = true;
  }

  els.elapsed.textContent = `${(elapsedMs(view) / 1000).toFixed(1)} s`;

  if (view.complete && view.metrics) {
    const m = view.metrics;
    els.summary.hidden = false;
    els.summary.textContent =
      `Total rub time ${m.total_rub_s.toFixed(1)} s - ` +
      `${m.compliant ? "within" : "outside"} the WHO 20-30 s window` +
      (m.all_steps_passed ? "" : " (not all steps passed)");
  } else {
    els.summary.hidden = true;
  }

  els.errors.textContent = view.errors.slice(-3).join("\n");
}
