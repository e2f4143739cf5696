import "./styles.css";
import { Dashboard } from "./dashboard";

const root = document.getElementById("app");
if (root) {
  const dashboard = new Dashboard(root);
  dashboard.init().catch((err) => {
    root.textContent = `failed to load: ${err instanceof Error ? err.message : String(err)}`;
  });
}
