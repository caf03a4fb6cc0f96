// Browser entry point. Query parameters pick the workspace and document:
//   index.html?workspace=lab&document=d1

import { ApiClient } from "./api.js";
import { LiveDocumentView } from "./live.js";
import { EventStream } from "./sse.js";
import { renderDocumentHtml } from "./ui.js";
import { text } from "./model.js";

async function boot(): Promise<void> {
  const params = new URLSearchParams(location.search);
  const workspace = params.get("workspace") ?? "lab";
  const docId = params.get("document") ?? "d1";
  const api = new ApiClient("", { token: params.get("token") ?? undefined });

  const view = new LiveDocumentView(workspace, docId);
  await view.open(api);

  const root = document.getElementById("app")!;
  const paint = () => {
    root.innerHTML = renderDocumentHtml(view);
    for (const input of root.querySelectorAll<HTMLInputElement>(".field input")) {
      input.addEventListener("change", () => {
        const didget = input.closest<HTMLElement>(".field")!.dataset.didget!;
        view.fill(api, didget, text(input.value)).catch(() => paint());
      });
    }
  };

  const stream = new EventStream();
  view.attach(stream);
  stream.on("document", () => paint());
  void stream.connect(api.eventsUrl(workspace));
  paint();
}

boot().catch((err) => {
  document.getElementById("app")!.textContent = String(err);
});
