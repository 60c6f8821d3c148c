// Thin DOM binding for the render model.

import type { RenderModel } from "./render.js";

export interface ViewHandlers {
  onStart(videoId: string, question: string): void;
  onAnswer(answer: "yes" | "no"): void;
  onLocalize(): void;
  onRetry(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function mount(root: HTMLElement, handlers: ViewHandlers): (model: RenderModel) => void {
  root.innerHTML = "";

  const banner = el("div", "banner hidden");
  const bannerText = el("span");
  const retryBtn = el("button", "retry", "Retry");
  retryBtn.addEventListener("click", () => handlers.onRetry());
  banner.append(bannerText, retryBtn);

  const startPane = el("section", "pane start");
  const videoInput = el("input");
  videoInput.placeholder = "video id";
  const questionInput = el("input");
  questionInput.placeholder = "What do you want to find?";
  const startBtn = el("button", "primary", "Start session");
  startBtn.addEventListener("click", () =>
    handlers.onStart(videoInput.value.trim(), questionInput.value.trim()),
  );
  startPane.append(videoInput, questionInput, startBtn);

  const dialoguePane = el("section", "pane dialogue hidden");
  const roundLabel = el("div", "round");
  const transcriptList = el("ol", "transcript");
  const pendingBox = el("div", "pending");
  const yesBtn = el("button", "answer yes", "Yes");
  const noBtn = el("button", "answer no", "No");
  yesBtn.addEventListener("click", () => handlers.onAnswer("yes"));
  noBtn.addEventListener("click", () => handlers.onAnswer("no"));
  const localizeBtn = el("button", "primary localize hidden", "Localize answer");
  localizeBtn.addEventListener("click", () => handlers.onLocalize());
  const failureBox = el("div", "failure hidden");
  dialoguePane.append(roundLabel, transcriptList, pendingBox, yesBtn, noBtn, localizeBtn, failureBox);

  const resultPane = el("section", "pane result hidden");
  const spanLabel = el("div", "span-label");
  const fallbackBadge = el("span", "badge hidden", "low-confidence fallback");
  const timelineBox = el("div", "timeline");
  const resultTranscript = el("ol", "transcript");
  resultPane.append(spanLabel, fallbackBadge, timelineBox, resultTranscript);

  root.append(banner, startPane, dialoguePane, resultPane);

  function renderTranscript(list: HTMLOListElement, model: RenderModel): void {
    list.innerHTML = "";
    for (const row of model.transcript) {
      const item = el("li");
      item.append(el("span", "q", row.question), el("strong", `a ${row.answer}`, row.answer));
      list.append(item);
    }
  }

  return (model: RenderModel) => {
    banner.classList.toggle("hidden", model.errorBanner === null);
    bannerText.textContent = model.errorBanner ?? "";

    startPane.classList.toggle("hidden", model.screen !== "start");
    dialoguePane.classList.toggle("hidden", model.screen !== "dialogue");
    resultPane.classList.toggle("hidden", model.screen !== "result");

    if (model.screen === "dialogue") {
      roundLabel.textContent = model.roundCounter ?? "";
      renderTranscript(transcriptList, model);
      pendingBox.textContent = model.pendingQuestion ?? "";
      yesBtn.disabled = noBtn.disabled = !model.answerButtonsEnabled;
      yesBtn.classList.toggle("hidden", model.pendingQuestion === null);
      noBtn.classList.toggle("hidden", model.pendingQuestion === null);
      localizeBtn.classList.toggle("hidden", !model.localizeVisible);
      localizeBtn.disabled = model.busy;
      failureBox.classList.toggle("hidden", model.failureReason === null);
      failureBox.textContent = model.failureReason ?? "";
    }

    if (model.screen === "result") {
      spanLabel.textContent = model.spanLabel ? `Answer span: ${model.spanLabel}` : "";
      fallbackBadge.classList.toggle("hidden", !model.fallbackBadge);
      timelineBox.innerHTML = "";
      for (const cell of model.timeline) {
        const block = el("div", cell.shaded ? "cell shaded" : "cell");
        block.style.left = `${(cell.left * 100).toFixed(3)}%`;
        block.style.width = `${(cell.width * 100).toFixed(3)}%`;
        const title = model.hoverTitles.get(cell.seg_id);
        if (title) block.title = title;
        timelineBox.append(block);
      }
      renderTranscript(resultTranscript, model);
    }
  };
}
