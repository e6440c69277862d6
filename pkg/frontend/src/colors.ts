/** Fixed label colors: clean whisper green, noisy whisper yellow, noise
 * red, other gray; unlabelled points are blue. */

export const LABEL_COLORS: Record<string, string> = {
  clean_whisper: "#2e9e4f",
  noisy_whisper: "#d9b514",
  noise: "#cc3b2f",
  other: "#8a8a8a",
};

export const UNLABELLED_COLOR = "#3b6fd4";
export const SELECTED_STROKE = "#111111";

export function colorFor(label: string | null): string {
  return label === null ? UNLABELLED_COLOR : LABEL_COLORS[label] ?? UNLABELLED_COLOR;
}

export const LABEL_HOTKEYS: Record<string, string> = {
  "1": "clean_whisper",
  "2": "noisy_whisper",
  "3": "noise",
  "4": "other",
};
