/** Read-only code pane mirroring a design's current CSS exactly. */

export function setCodePane(pane: HTMLElement, css: string): void {
  pane.textContent = css;
}

export function codePaneText(pane: HTMLElement): string {
  return pane.textContent ?? "";
}
