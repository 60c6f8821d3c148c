import { Client } from "./api.js";
import { renderModel } from "./render.js";
import { SessionFlow } from "./state.js";
import { mount } from "./view.js";

const baseUrl = (window as unknown as { VALOC_BASE_URL?: string }).VALOC_BASE_URL ?? "";
const client = new Client(baseUrl, (url, init) => fetch(url, init));
const flow = new SessionFlow(client);

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app element");
}

const render = mount(root, {
  onStart: (videoId, question) => {
    if (videoId && question) void flow.start(videoId, question);
  },
  onAnswer: (answer) => void flow.clickAnswer(answer),
  onLocalize: () => void flow.clickLocalize(),
  onRetry: () => void flow.retry(),
});

flow.subscribe((state) => render(renderModel(state)));
