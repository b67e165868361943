import { ask, fetchFaq } from "./api";
import { QaApp } from "./app";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app mount point");
}
void new QaApp(root, { ask, fetchFaq }).init();
