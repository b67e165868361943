declare global {
  interface Window {
    QAS_API_BASE?: string;
  }
}

/** API base URL: runtime override first, then build-time env, then same origin. */
export function apiBase(): string {
  if (typeof window !== "undefined" && window.QAS_API_BASE) {
    return window.QAS_API_BASE.replace(/\/+$/, "");
  }
  const env = import.meta.env?.VITE_API_BASE as string | undefined;
  return env ? env.replace(/\/+$/, "") : "";
}
