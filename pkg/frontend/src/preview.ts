/**
 * Design previews. Generated CSS is scoped with a `.design-N` ancestor
 * selector, so each preview wraps its own copy of the SVG in a
 * `div.design-N`; rules from one design cannot reach another preview even
 * though element ids repeat across copies.
 */

export function renderPreview(
  container: HTMLElement,
  svg: string,
  scopeIndex: number,
  css: string,
): void {
  container.classList.add("design-preview");
  container.dataset.scope = String(scopeIndex);
  container.innerHTML = "";

  const style = document.createElement("style");
  style.textContent = css;
  container.appendChild(style);

  const scope = document.createElement("div");
  scope.className = `design-${scopeIndex}`;
  scope.innerHTML = svg;
  container.appendChild(scope);
}

/** Replace only the CSS of an already-rendered preview. */
export function updatePreviewCss(container: HTMLElement, css: string): void {
  const style = container.querySelector("style");
  if (!style) throw new Error("preview has not been rendered");
  style.textContent = css;
}
